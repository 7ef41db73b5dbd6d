#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "lfdf/tensor.hpp"

namespace lfdf::ad {

// A named trainable tensor. Parameters live in the model; gradients live on
// the tape, so concurrent forward/backward passes over shared parameters are
// safe as long as the parameters themselves are not mutated.
struct Param {
    std::string name;
    Tensor value;

    Param() = default;
    Param(std::string n, Tensor v) : name(std::move(n)), value(std::move(v)) {}
};

struct Node {
    Tensor val;
    Tensor grad;  // allocated only on recording tapes
    const Param* param = nullptr;
};

using Var = std::shared_ptr<Node>;

// Reverse-mode tape. Records one backward closure per op; backward() replays
// them in reverse. One tape per forward pass.
class Tape {
public:
    explicit Tape(bool recording = true) : recording_(recording) {}

    bool recording() const { return recording_; }

    Var input(Tensor v);
    Var leaf(const Param& p);  // cached: one node per parameter per tape
    Var make(Tensor v);        // internal node
    void push(std::function<void()> back);

    // Seeds d(loss)=1 and replays the tape. loss must be scalar.
    void backward(const Var& loss);

    // Gradient of a parameter after backward(); zeros if the parameter was
    // never touched on this tape.
    Tensor grad_of(const Param& p) const;
    std::vector<Tensor> grads_of(const std::vector<Param*>& params) const;

private:
    std::vector<std::function<void()>> backs_;
    std::unordered_map<const Param*, Var> leaves_;
    bool recording_;
};

// x: [H, W, C_in], w: [C_out, C_in, k, k], b: [C_out]. Stride 1, zero padding
// dilation*(k-1)/2: spatial size preserved.
Var conv2d(Tape& t, const Var& x, const Param& w, const Param& b, int dilation = 1);

Var leaky_relu(Tape& t, const Var& x, double slope);

Var add(Tape& t, const Var& a, const Var& b);

// Adds a tensor that does not require gradients (e.g. a bicubic skip).
Var add_const(Tape& t, const Var& a, const Tensor& c);

Var concat_c(Tape& t, const std::vector<Var>& xs);

// Channels [c0, c0+len) of x.
Var slice_c(Tape& t, const Var& x, int c0, int len);

// [H, W, a*a*C] -> [a*H, a*W, C]; out(ah+i, aw+j, c) = in(h, w, c*a*a + i*a + j).
Var pixel_shuffle(Tape& t, const Var& x, int alpha);

// Deformable convolution: offsets is a computed [H, W, 2*k*k] tensor.
Var deform_conv2d(Tape& t, const Var& x, const Var& offsets, const Param& w, const Param& b);

// Mean absolute error against a fixed target; returns a scalar Var.
Var mean_abs_error(Tape& t, const Var& pred, const Tensor& target);

// Mean of scalar vars, itself a scalar.
Var mean_scalars(Tape& t, const std::vector<Var>& xs);

}  // namespace lfdf::ad

#pragma once

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Dense>

#include "marlsched/simcore/rng.hpp"

namespace marlsched::neuro {

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// One learnable tensor and its gradient accumulator.
template <typename Scalar>
struct ParamTensor {
  std::string name;
  Mat<Scalar> value;
  Mat<Scalar> grad;

  ParamTensor() = default;
  ParamTensor(std::string n, Eigen::Index rows, Eigen::Index cols)
      : name(std::move(n)), value(Mat<Scalar>::Zero(rows, cols)), grad(Mat<Scalar>::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
  Eigen::Index size() const { return value.size(); }

  // Uniform on +-1/sqrt(fan_in); draws consume the stream row-major so the
  // layout is reproducible across scalar types.
  void init_uniform(Eigen::Index fan_in, simcore::RngStream& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (Eigen::Index i = 0; i < value.rows(); ++i)
      for (Eigen::Index j = 0; j < value.cols(); ++j)
        value(i, j) = static_cast<Scalar>(rng.uniform(-bound, bound));
  }
};

// Elementwise activations and their reverse-mode counterparts. Backward
// functions take the upstream gradient plus whatever the forward pass makes
// cheapest (input or output).

template <typename Scalar>
Mat<Scalar> relu(const Mat<Scalar>& x) {
  return x.cwiseMax(Scalar(0));
}

template <typename Scalar>
Mat<Scalar> relu_backward(const Mat<Scalar>& gy, const Mat<Scalar>& x) {
  return ((x.array() > Scalar(0)).template cast<Scalar>() * gy.array()).matrix();
}

template <typename Scalar>
Mat<Scalar> elu(const Mat<Scalar>& x, Scalar alpha = Scalar(1)) {
  return (x.array() > Scalar(0))
      .select(x.array(), alpha * (x.array().exp() - Scalar(1)))
      .matrix();
}

template <typename Scalar>
Mat<Scalar> elu_backward(const Mat<Scalar>& gy, const Mat<Scalar>& x, Scalar alpha = Scalar(1)) {
  return ((x.array() > Scalar(0)).select(Mat<Scalar>::Ones(x.rows(), x.cols()).array(),
                                         alpha * x.array().exp()) *
          gy.array())
      .matrix();
}

template <typename Scalar>
Mat<Scalar> abs_act(const Mat<Scalar>& x) {
  return x.cwiseAbs();
}

template <typename Scalar>
Mat<Scalar> abs_backward(const Mat<Scalar>& gy, const Mat<Scalar>& x) {
  return (x.array().sign() * gy.array()).matrix();
}

template <typename Scalar>
Mat<Scalar> sigmoid(const Mat<Scalar>& x) {
  return (Scalar(1) / (Scalar(1) + (-x.array()).exp())).matrix();
}

// Takes the forward output: s'(x) = y (1 - y).
template <typename Scalar>
Mat<Scalar> sigmoid_backward(const Mat<Scalar>& gy, const Mat<Scalar>& y) {
  return (gy.array() * y.array() * (Scalar(1) - y.array())).matrix();
}

// Fully connected layer, batch as columns: y = W x + b. One forward may be
// in flight at a time (the cache holds the last input).
template <typename Scalar>
class Linear {
 public:
  Linear(const std::string& name, Eigen::Index in, Eigen::Index out)
      : W(name + ".W", out, in), b(name + ".b", out, 1) {}

  void init(simcore::RngStream& rng) {
    W.init_uniform(W.value.cols(), rng);
    b.init_uniform(W.value.cols(), rng);
  }

  Mat<Scalar> forward(const Mat<Scalar>& x) {
    x_ = x;
    Mat<Scalar> y = W.value * x;
    y.colwise() += b.value.col(0);
    return y;
  }

  // Accumulates parameter gradients, returns the input gradient.
  Mat<Scalar> backward(const Mat<Scalar>& gy) {
    W.grad.noalias() += gy * x_.transpose();
    b.grad.col(0).noalias() += gy.rowwise().sum();
    return W.value.transpose() * gy;
  }

  Eigen::Index in_dim() const { return W.value.cols(); }
  Eigen::Index out_dim() const { return W.value.rows(); }

  ParamTensor<Scalar> W, b;

 private:
  Mat<Scalar> x_;
};

// Gated recurrent cell with combined gate weights (rows: update, reset,
// candidate) and the reset gate applied after the recurrent matmul:
//   z = sigmoid(Wx_z x + Wh_z h + bx_z + bh_z)
//   r = sigmoid(Wx_r x + Wh_r h + bx_r + bh_r)
//   c = tanh(Wx_c x + bx_c + r .* (Wh_c h + bh_c))
//   h' = z .* h + (1 - z) .* c
// This keeps both the input and the recurrent path to a single GEMM each.
template <typename Scalar>
class GruCell {
 public:
  GruCell(const std::string& name, Eigen::Index in, Eigen::Index hidden)
      : Wx(name + ".Wx", 3 * hidden, in),
        Wh(name + ".Wh", 3 * hidden, hidden),
        bx(name + ".bx", 3 * hidden, 1),
        bh(name + ".bh", 3 * hidden, 1),
        hidden_(hidden) {}

  void init(simcore::RngStream& rng) {
    Wx.init_uniform(Wx.value.cols(), rng);
    Wh.init_uniform(Wh.value.cols(), rng);
    bx.init_uniform(Wx.value.cols(), rng);
    bh.init_uniform(Wh.value.cols(), rng);
  }

  Mat<Scalar> forward(const Mat<Scalar>& x, const Mat<Scalar>& h_prev) {
    const Eigen::Index H = hidden_;
    x_ = x;
    h_ = h_prev;
    Mat<Scalar> gi = Wx.value * x;
    gi.colwise() += bx.value.col(0);
    Mat<Scalar> gh = Wh.value * h_prev;
    gh.colwise() += bh.value.col(0);

    z_ = sigmoid<Scalar>(gi.topRows(H) + gh.topRows(H));
    r_ = sigmoid<Scalar>(gi.middleRows(H, H) + gh.middleRows(H, H));
    hc_lin_ = gh.bottomRows(H);
    c_ = (gi.bottomRows(H).array() + r_.array() * hc_lin_.array()).tanh().matrix();
    return (z_.array() * h_prev.array() + (Scalar(1) - z_.array()) * c_.array()).matrix();
  }

  // Returns (grad wrt x, grad wrt h_prev).
  std::pair<Mat<Scalar>, Mat<Scalar>> backward(const Mat<Scalar>& gh_new) {
    const Eigen::Index H = hidden_;
    const auto B = gh_new.cols();

    const Mat<Scalar> gz = (gh_new.array() * (h_.array() - c_.array())).matrix();
    const Mat<Scalar> gc = (gh_new.array() * (Scalar(1) - z_.array())).matrix();
    const Mat<Scalar> gc_pre = (gc.array() * (Scalar(1) - c_.array().square())).matrix();
    const Mat<Scalar> gr = (gc_pre.array() * hc_lin_.array()).matrix();
    const Mat<Scalar> gz_pre = (gz.array() * z_.array() * (Scalar(1) - z_.array())).matrix();
    const Mat<Scalar> gr_pre = (gr.array() * r_.array() * (Scalar(1) - r_.array())).matrix();

    Mat<Scalar> gate_x(3 * H, B);
    gate_x.topRows(H) = gz_pre;
    gate_x.middleRows(H, H) = gr_pre;
    gate_x.bottomRows(H) = gc_pre;

    Mat<Scalar> gate_h = gate_x;
    gate_h.bottomRows(H) = (gc_pre.array() * r_.array()).matrix();

    Wx.grad.noalias() += gate_x * x_.transpose();
    bx.grad.col(0).noalias() += gate_x.rowwise().sum();
    Wh.grad.noalias() += gate_h * h_.transpose();
    bh.grad.col(0).noalias() += gate_h.rowwise().sum();

    Mat<Scalar> gx = Wx.value.transpose() * gate_x;
    Mat<Scalar> gh_prev = Wh.value.transpose() * gate_h;
    gh_prev.array() += gh_new.array() * z_.array();
    return {std::move(gx), std::move(gh_prev)};
  }

  Eigen::Index hidden_dim() const { return hidden_; }
  Eigen::Index in_dim() const { return Wx.value.cols(); }

  ParamTensor<Scalar> Wx, Wh, bx, bh;

 private:
  Eigen::Index hidden_;
  Mat<Scalar> x_, h_, z_, r_, c_, hc_lin_;
};

}  // namespace marlsched::neuro

#pragma once

// Central-difference gradient checks for every layer type.  Each layer is
// probed in isolation with a smooth quadratic loss over its outputs, so the
// comparison is free of ReLU kink artifacts; the classifier head (dense
// layers, softmax and cross-entropy) is additionally checked through the
// full network on a real batch.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "core/nn.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"

namespace gradcheck {

using photoscore::BatchNorm;
using photoscore::BnCache;
using photoscore::Conv1x1;
using photoscore::Dense;
using photoscore::Matrix;
using photoscore::Mode;
using photoscore::Rng;
using photoscore::Tensor;

constexpr double kEps = 1e-5;

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// L(y) = sum_k c_k y_k + 0.5 sum_k q_k y_k^2, smooth and curvature-bearing.
struct Probe {
  std::vector<double> c, q;

  explicit Probe(size_t n, Rng& rng) : c(n), q(n) {
    for (auto& v : c) v = rng.normal();
    for (auto& v : q) v = 0.5 + rng.uniform();
  }

  double loss(const double* y) const {
    double total = 0.0;
    for (size_t k = 0; k < c.size(); ++k)
      total += c[k] * y[k] + 0.5 * q[k] * y[k] * y[k];
    return total;
  }

  void dloss(const double* y, double* dy) const {
    for (size_t k = 0; k < c.size(); ++k) dy[k] = c[k] + q[k] * y[k];
  }
};

inline void fill_normal(std::vector<double>& v, Rng& rng) {
  for (auto& x : v) x = rng.normal();
}

// Worst relative error over every weight, bias and input coordinate.
inline double check_conv(uint64_t seed) {
  Rng rng(seed);
  Conv1x1 conv;
  conv.configure(3, 4, 1);
  fill_normal(conv.w, rng);
  fill_normal(conv.b, rng);
  Tensor g;
  g.resize(4, 3, 3, 3);
  fill_normal(g.v, rng);

  Tensor out;
  conv_matmul_forward(g, conv, out);
  const Probe probe(out.v.size(), rng);
  Tensor dout;
  dout.resize(out.n, out.h, out.w, out.c);
  probe.dloss(out.v.data(), dout.v.data());

  std::fill(conv.gw.begin(), conv.gw.end(), 0.0);
  std::fill(conv.gb.begin(), conv.gb.end(), 0.0);
  Tensor dg;
  conv_matmul_backward(g, dout, conv, &dg);

  auto loss_now = [&] {
    Tensor y;
    conv_matmul_forward(g, conv, y);
    return probe.loss(y.v.data());
  };
  auto numeric = [&](double& x) {
    const double saved = x;
    x = saved + kEps;
    const double up = loss_now();
    x = saved - kEps;
    const double down = loss_now();
    x = saved;
    return (up - down) / (2.0 * kEps);
  };

  double worst = 0.0;
  for (size_t k = 0; k < conv.w.size(); ++k)
    worst = std::max(worst, rel_err(numeric(conv.w[k]), conv.gw[k]));
  for (size_t k = 0; k < conv.b.size(); ++k)
    worst = std::max(worst, rel_err(numeric(conv.b[k]), conv.gb[k]));
  for (size_t k = 0; k < g.v.size(); ++k)
    worst = std::max(worst, rel_err(numeric(g.v[k]), dg.v[k]));
  return worst;
}

// Batch-norm train mode, including the gradient through the batch
// statistics.
inline double check_bn(uint64_t seed) {
  Rng rng(seed);
  BatchNorm bn;
  bn.configure(3);
  for (auto& v : bn.gamma) v = 0.5 + rng.uniform();
  fill_normal(bn.beta, rng);
  Tensor x;
  x.resize(4, 2, 2, 3);
  fill_normal(x.v, rng);

  BnCache cache;
  Tensor out;
  bn_forward(bn, x, Mode::train, cache, out);
  const Probe probe(out.v.size(), rng);
  Tensor dy;
  dy.resize(out.n, out.h, out.w, out.c);
  probe.dloss(out.v.data(), dy.v.data());

  std::fill(bn.ggamma.begin(), bn.ggamma.end(), 0.0);
  std::fill(bn.gbeta.begin(), bn.gbeta.end(), 0.0);
  bn_backward(bn, cache, dy);  // dy becomes dx

  auto loss_now = [&] {
    BnCache c;
    Tensor y;
    bn_forward(bn, x, Mode::train, c, y);
    return probe.loss(y.v.data());
  };
  auto numeric = [&](double& v) {
    const double saved = v;
    v = saved + kEps;
    const double up = loss_now();
    v = saved - kEps;
    const double down = loss_now();
    v = saved;
    return (up - down) / (2.0 * kEps);
  };

  double worst = 0.0;
  for (size_t k = 0; k < bn.gamma.size(); ++k)
    worst = std::max(worst, rel_err(numeric(bn.gamma[k]), bn.ggamma[k]));
  for (size_t k = 0; k < bn.beta.size(); ++k)
    worst = std::max(worst, rel_err(numeric(bn.beta[k]), bn.gbeta[k]));
  for (size_t k = 0; k < x.v.size(); ++k)
    worst = std::max(worst, rel_err(numeric(x.v[k]), dy.v[k]));
  return worst;
}

inline double check_dense(uint64_t seed) {
  Rng rng(seed);
  Dense d;
  d.configure(6, 4);
  fill_normal(d.w, rng);
  fill_normal(d.b, rng);
  const int rows = 4;
  std::vector<double> in(static_cast<size_t>(rows) * d.in_f);
  fill_normal(in, rng);

  Matrix out;
  dense_forward(in.data(), rows, d, out);
  const Probe probe(static_cast<size_t>(rows) * d.out_f, rng);
  Matrix dout(rows, d.out_f);
  probe.dloss(out.data(), dout.data());

  std::fill(d.gw.begin(), d.gw.end(), 0.0);
  std::fill(d.gb.begin(), d.gb.end(), 0.0);
  std::vector<double> din(in.size(), 0.0);
  dense_backward(in.data(), rows, dout, d, din.data());

  auto loss_now = [&] {
    Matrix y;
    dense_forward(in.data(), rows, d, y);
    return probe.loss(y.data());
  };
  auto numeric = [&](double& v) {
    const double saved = v;
    v = saved + kEps;
    const double up = loss_now();
    v = saved - kEps;
    const double down = loss_now();
    v = saved;
    return (up - down) / (2.0 * kEps);
  };

  double worst = 0.0;
  for (size_t k = 0; k < d.w.size(); ++k)
    worst = std::max(worst, rel_err(numeric(d.w[k]), d.gw[k]));
  for (size_t k = 0; k < d.b.size(); ++k)
    worst = std::max(worst, rel_err(numeric(d.b[k]), d.gb[k]));
  for (size_t k = 0; k < in.size(); ++k)
    worst = std::max(worst, rel_err(numeric(in[k]), din[k]));
  return worst;
}

// ReLU away from the kink (inputs bounded away from zero by 0.2).
inline double check_relu(uint64_t seed) {
  Rng rng(seed);
  Tensor x;
  x.resize(4, 2, 2, 3);
  for (auto& v : x.v) {
    v = 0.2 + 1.8 * rng.uniform();
    if (rng.below(2) == 1) v = -v;
  }

  Tensor out = x;
  relu_inplace(out);
  const Probe probe(out.v.size(), rng);
  Tensor dy;
  dy.resize(x.n, x.h, x.w, x.c);
  probe.dloss(out.v.data(), dy.v.data());
  relu_backward(out, dy);  // dy becomes dx

  auto loss_now = [&] {
    Tensor y = x;
    relu_inplace(y);
    return probe.loss(y.v.data());
  };

  double worst = 0.0;
  for (size_t k = 0; k < x.v.size(); ++k) {
    const double saved = x.v[k];
    x.v[k] = saved + kEps;
    const double up = loss_now();
    x.v[k] = saved - kEps;
    const double down = loss_now();
    x.v[k] = saved;
    worst = std::max(worst, rel_err((up - down) / (2.0 * kEps), dy.v[k]));
  }
  return worst;
}

// The classifier head (both dense layers, softmax, cross-entropy) through
// the real network on a 4-image batch.  The path from these parameters to
// the loss is smooth, so central differences are trustworthy.
inline double check_head(uint64_t seed, size_t coords_per_group) {
  using namespace photoscore;
  SynthSpec spec;
  spec.total = 8;
  spec.proportions = {0.125, 0.125, 0.125, 0.125,
                      0.125, 0.125, 0.125, 0.125};
  spec.seed = seed;
  const Dataset ds = synth_dataset(spec);

  TypeCNetwork net = TypeCNetwork::init(seed);
  std::vector<int> idx = {0, 1, 2, 3};
  net.set_zerocenter(ds, idx);
  std::vector<const Image*> batch;
  std::vector<int> labels;
  for (int i : idx) {
    batch.push_back(&ds.samples[i].image);
    labels.push_back(ds.samples[i].score - kScoreMin);
  }

  ForwardTrace trace;
  forward(net, batch, Mode::train, trace);
  backward(net, trace, labels);

  auto loss_now = [&] {
    ForwardTrace t;
    forward(net, batch, Mode::train, t);
    return cross_entropy(t, labels);
  };

  double worst = 0.0;
  for (auto& group : net.trainable_params()) {
    if (group.name.rfind("fc", 0) != 0) continue;
    std::vector<size_t> order(group.grad->size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return std::abs((*group.grad)[a]) > std::abs((*group.grad)[b]);
    });
    const size_t picks = std::min(coords_per_group, order.size());
    for (size_t p = 0; p < picks; ++p) {
      const size_t k = order[p];
      const double saved = (*group.value)[k];
      (*group.value)[k] = saved + kEps;
      const double up = loss_now();
      (*group.value)[k] = saved - kEps;
      const double down = loss_now();
      (*group.value)[k] = saved;
      worst = std::max(worst,
                       rel_err((up - down) / (2.0 * kEps), (*group.grad)[k]));
    }
  }
  return worst;
}

}  // namespace gradcheck

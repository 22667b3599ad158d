#include "core/nn.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"

namespace photoscore {

namespace {

int strided_out(int in, int stride) { return (in - 1) / stride + 1; }

void he_fill(std::vector<double>& w, int fan_in, Rng& rng) {
  const double sd = std::sqrt(2.0 / fan_in);
  for (double& x : w) x = sd * rng.normal();
}

}  // namespace

// Strided subsample; output pixel (y, x) reads input pixel (y*s, x*s).
void gather(const Tensor& x, int stride, Tensor& g) {
  g.resize(x.n, strided_out(x.h, stride), strided_out(x.w, stride), x.c);
  for (int in = 0; in < x.n; ++in)
    for (int oy = 0; oy < g.h; ++oy)
      for (int ox = 0; ox < g.w; ++ox) {
        const double* src = x.pixel(in, oy * stride, ox * stride);
        double* dst = g.pixel(in, oy, ox);
        for (int c = 0; c < x.c; ++c) dst[c] = src[c];
      }
}

// Adjoint of gather: routes gradients back to the sampled positions.
void scatter_add(const Tensor& dg, int stride, Tensor& dx) {
  for (int in = 0; in < dg.n; ++in)
    for (int oy = 0; oy < dg.h; ++oy)
      for (int ox = 0; ox < dg.w; ++ox) {
        const double* src = dg.pixel(in, oy, ox);
        double* dst = dx.pixel(in, oy * stride, ox * stride);
        for (int c = 0; c < dg.c; ++c) dst[c] += src[c];
      }
}

// Per-pixel linear map of an already gathered block.
void conv_matmul_forward(const Tensor& g, const Conv1x1& conv, Tensor& out) {
  out.resize(g.n, g.h, g.w, conv.out_c);
  const int pixels = g.n * g.h * g.w;
  const int ci = conv.in_c, co = conv.out_c;
  for (int p = 0; p < pixels; ++p) {
    const double* x = g.v.data() + static_cast<size_t>(p) * ci;
    double* y = out.v.data() + static_cast<size_t>(p) * co;
    for (int j = 0; j < co; ++j) y[j] = conv.b[j];
    for (int i = 0; i < ci; ++i) {
      const double xi = x[i];
      const double* wr = conv.w.data() + static_cast<size_t>(i) * co;
      for (int j = 0; j < co; ++j) y[j] += xi * wr[j];
    }
  }
}

// Accumulates weight/bias gradients; optionally produces the gathered-input
// gradient.
void conv_matmul_backward(const Tensor& g, const Tensor& dout, Conv1x1& conv,
                          Tensor* dg) {
  const int pixels = g.n * g.h * g.w;
  const int ci = conv.in_c, co = conv.out_c;
  if (dg) dg->resize(g.n, g.h, g.w, ci);
  for (int p = 0; p < pixels; ++p) {
    const double* x = g.v.data() + static_cast<size_t>(p) * ci;
    const double* dy = dout.v.data() + static_cast<size_t>(p) * co;
    for (int j = 0; j < co; ++j) conv.gb[j] += dy[j];
    for (int i = 0; i < ci; ++i) {
      const double xi = x[i];
      double* gw = conv.gw.data() + static_cast<size_t>(i) * co;
      double acc = 0.0;
      const double* wr = conv.w.data() + static_cast<size_t>(i) * co;
      for (int j = 0; j < co; ++j) {
        gw[j] += xi * dy[j];
        acc += wr[j] * dy[j];
      }
      if (dg) dg->v[static_cast<size_t>(p) * ci + i] = acc;
    }
  }
}

void bn_forward(BatchNorm& bn, const Tensor& x, Mode mode, BnCache& cache,
                Tensor& out) {
  out.resize(x.n, x.h, x.w, x.c);
  const int count = x.n * x.h * x.w;
  const int channels = x.c;

  if (mode == Mode::infer) {
    std::vector<double> scale(channels), shift(channels);
    for (int c = 0; c < channels; ++c) {
      const double inv = 1.0 / std::sqrt(bn.running_var[c] + bn.eps);
      scale[c] = bn.gamma[c] * inv;
      shift[c] = bn.beta[c] - bn.running_mean[c] * scale[c];
    }
    for (int p = 0; p < count; ++p) {
      const double* px = x.v.data() + static_cast<size_t>(p) * channels;
      double* py = out.v.data() + static_cast<size_t>(p) * channels;
      for (int c = 0; c < channels; ++c) py[c] = px[c] * scale[c] + shift[c];
    }
    return;
  }

  std::vector<double> sum(channels, 0.0), sumsq(channels, 0.0);
  for (int p = 0; p < count; ++p) {
    const double* px = x.v.data() + static_cast<size_t>(p) * channels;
    for (int c = 0; c < channels; ++c) {
      sum[c] += px[c];
      sumsq[c] += px[c] * px[c];
    }
  }
  std::vector<double> mean(channels), var(channels);
  cache.inv_std.resize(channels);
  for (int c = 0; c < channels; ++c) {
    mean[c] = sum[c] / count;
    var[c] = std::max(0.0, sumsq[c] / count - mean[c] * mean[c]);
    cache.inv_std[c] = 1.0 / std::sqrt(var[c] + bn.eps);
  }

  cache.xhat.resize(x.n, x.h, x.w, x.c);
  for (int p = 0; p < count; ++p) {
    const double* px = x.v.data() + static_cast<size_t>(p) * channels;
    double* ph = cache.xhat.v.data() + static_cast<size_t>(p) * channels;
    double* py = out.v.data() + static_cast<size_t>(p) * channels;
    for (int c = 0; c < channels; ++c) {
      ph[c] = (px[c] - mean[c]) * cache.inv_std[c];
      py[c] = bn.gamma[c] * ph[c] + bn.beta[c];
    }
  }

  const double keep = bn.momentum;
  for (int c = 0; c < channels; ++c) {
    bn.running_mean[c] = keep * bn.running_mean[c] + (1.0 - keep) * mean[c];
    const double unbiased =
        count > 1 ? var[c] * count / (count - 1) : var[c];
    bn.running_var[c] = keep * bn.running_var[c] + (1.0 - keep) * unbiased;
  }
}

// dy is consumed in place and replaced by dx.
void bn_backward(BatchNorm& bn, const BnCache& cache, Tensor& dy) {
  const int count = dy.n * dy.h * dy.w;
  const int channels = dy.c;
  std::vector<double> s1(channels, 0.0), s2(channels, 0.0);
  for (int p = 0; p < count; ++p) {
    const double* pd = dy.v.data() + static_cast<size_t>(p) * channels;
    const double* ph = cache.xhat.v.data() + static_cast<size_t>(p) * channels;
    for (int c = 0; c < channels; ++c) {
      const double dyh = pd[c] * bn.gamma[c];
      s1[c] += dyh;
      s2[c] += dyh * ph[c];
      bn.ggamma[c] += pd[c] * ph[c];
      bn.gbeta[c] += pd[c];
    }
  }
  for (int c = 0; c < channels; ++c) {
    s1[c] /= count;
    s2[c] /= count;
  }
  for (int p = 0; p < count; ++p) {
    double* pd = dy.v.data() + static_cast<size_t>(p) * channels;
    const double* ph = cache.xhat.v.data() + static_cast<size_t>(p) * channels;
    for (int c = 0; c < channels; ++c) {
      const double dyh = pd[c] * bn.gamma[c];
      pd[c] = cache.inv_std[c] * (dyh - s1[c] - ph[c] * s2[c]);
    }
  }
}

void relu_inplace(Tensor& t) {
  for (double& x : t.v) x = x > 0.0 ? x : 0.0;
}

// Masks dy by the post-ReLU activations.
void relu_backward(const Tensor& activated, Tensor& dy) {
  for (size_t i = 0; i < dy.v.size(); ++i)
    if (activated.v[i] <= 0.0) dy.v[i] = 0.0;
}

void dense_forward(const double* in, int rows, Dense& d, Matrix& out) {
  out = Matrix(rows, d.out_f);
  for (int r = 0; r < rows; ++r) {
    const double* x = in + static_cast<size_t>(r) * d.in_f;
    double* y = &out(r, 0);
    for (int j = 0; j < d.out_f; ++j) y[j] = d.b[j];
    for (int i = 0; i < d.in_f; ++i) {
      const double xi = x[i];
      if (xi == 0.0) continue;
      const double* wr = d.w.data() + static_cast<size_t>(i) * d.out_f;
      for (int j = 0; j < d.out_f; ++j) y[j] += xi * wr[j];
    }
  }
}

void dense_backward(const double* in, int rows, const Matrix& dout, Dense& d,
                    double* din) {
  for (int r = 0; r < rows; ++r) {
    const double* x = in + static_cast<size_t>(r) * d.in_f;
    const double* dy = dout.data() + static_cast<size_t>(r) * d.out_f;
    for (int j = 0; j < d.out_f; ++j) d.gb[j] += dy[j];
    for (int i = 0; i < d.in_f; ++i) {
      double* gw = d.gw.data() + static_cast<size_t>(i) * d.out_f;
      const double* wr = d.w.data() + static_cast<size_t>(i) * d.out_f;
      const double xi = x[i];
      double acc = 0.0;
      for (int j = 0; j < d.out_f; ++j) {
        gw[j] += xi * dy[j];
        acc += wr[j] * dy[j];
      }
      if (din) din[static_cast<size_t>(r) * d.in_f + i] = acc;
    }
  }
}

void Conv1x1::configure(int in_channels, int out_channels, int stride_) {
  in_c = in_channels;
  out_c = out_channels;
  stride = stride_;
  w.assign(static_cast<size_t>(in_c) * out_c, 0.0);
  b.assign(out_c, 0.0);
  gw.assign(w.size(), 0.0);
  gb.assign(b.size(), 0.0);
}

void BatchNorm::configure(int channels_) {
  channels = channels_;
  gamma.assign(channels, 1.0);
  beta.assign(channels, 0.0);
  running_mean.assign(channels, 0.0);
  running_var.assign(channels, 1.0);
  ggamma.assign(channels, 0.0);
  gbeta.assign(channels, 0.0);
}

void Dense::configure(int in_features, int out_features) {
  in_f = in_features;
  out_f = out_features;
  w.assign(static_cast<size_t>(in_f) * out_f, 0.0);
  b.assign(out_f, 0.0);
  gw.assign(w.size(), 0.0);
  gb.assign(b.size(), 0.0);
}

void TypeCNetwork::configure_layers() {
  conv1.configure(3, 94, 8);
  conv2.configure(94, 36, 4);
  conv3.configure(36, 36, 1);
  bn1.configure(94);
  bn2.configure(36);
  bn3.configure(36);
  fc1.configure(8 * 8 * 36, 36);
  fc2.configure(36, 8);
}

TypeCNetwork TypeCNetwork::init(uint64_t seed) {
  TypeCNetwork net;
  net.seed = seed;
  net.configure_layers();

  Rng rng(mix_seed(seed, 0x11e));
  he_fill(net.conv1.w, net.conv1.in_c, rng);
  he_fill(net.conv2.w, net.conv2.in_c, rng);
  he_fill(net.conv3.w, net.conv3.in_c, rng);
  he_fill(net.fc1.w, net.fc1.in_f, rng);
  he_fill(net.fc2.w, net.fc2.in_f, rng);
  return net;
}

std::vector<ParamGroup> TypeCNetwork::trainable_params() {
  std::vector<ParamGroup> g;
  auto conv = [&](const char* n, Conv1x1& c) {
    g.push_back({std::string(n) + ".weight", &c.w, &c.gw, true});
    g.push_back({std::string(n) + ".bias", &c.b, &c.gb, false});
  };
  auto bn = [&](const char* n, BatchNorm& b) {
    g.push_back({std::string(n) + ".gamma", &b.gamma, &b.ggamma, false});
    g.push_back({std::string(n) + ".beta", &b.beta, &b.gbeta, false});
  };
  auto dense = [&](const char* n, Dense& d) {
    g.push_back({std::string(n) + ".weight", &d.w, &d.gw, true});
    g.push_back({std::string(n) + ".bias", &d.b, &d.gb, false});
  };
  conv("conv1", conv1);
  bn("bn1", bn1);
  conv("conv2", conv2);
  bn("bn2", bn2);
  conv("conv3", conv3);
  bn("bn3", bn3);
  dense("fc1", fc1);
  dense("fc2", fc2);
  return g;
}

std::vector<ParamGroup> TypeCNetwork::state_params() {
  std::vector<ParamGroup> g;
  auto conv = [&](const char* n, Conv1x1& c) {
    g.push_back({std::string(n) + ".weight", &c.w, &c.gw, true});
    g.push_back({std::string(n) + ".bias", &c.b, &c.gb, false});
  };
  auto bn = [&](const char* n, BatchNorm& b) {
    g.push_back({std::string(n) + ".gamma", &b.gamma, &b.ggamma, false});
    g.push_back({std::string(n) + ".beta", &b.beta, &b.gbeta, false});
    g.push_back({std::string(n) + ".running_mean", &b.running_mean, nullptr,
                 false});
    g.push_back({std::string(n) + ".running_var", &b.running_var, nullptr,
                 false});
  };
  auto dense = [&](const char* n, Dense& d) {
    g.push_back({std::string(n) + ".weight", &d.w, &d.gw, true});
    g.push_back({std::string(n) + ".bias", &d.b, &d.gb, false});
  };
  conv("conv1", conv1);
  bn("bn1", bn1);
  conv("conv2", conv2);
  bn("bn2", bn2);
  conv("conv3", conv3);
  bn("bn3", bn3);
  dense("fc1", fc1);
  dense("fc2", fc2);
  return g;
}

Matrix TypeCNetwork::final_fc_weights() const {
  Matrix w(fc2.in_f, fc2.out_f);
  for (int i = 0; i < fc2.in_f; ++i)
    for (int j = 0; j < fc2.out_f; ++j)
      w(i, j) = fc2.w[static_cast<size_t>(i) * fc2.out_f + j];
  return w;
}

void TypeCNetwork::set_zerocenter(const Dataset& ds,
                                  std::span<const int> indices) {
  double sum[3] = {0.0, 0.0, 0.0};
  size_t count = 0;
  for (int idx : indices) {
    const Image& img = ds.samples[idx].image;
    const size_t px = img.pixels.size() / 3;
    for (size_t p = 0; p < px; ++p) {
      sum[0] += img.pixels[3 * p];
      sum[1] += img.pixels[3 * p + 1];
      sum[2] += img.pixels[3 * p + 2];
    }
    count += px;
  }
  if (count == 0) fail(Errc::bad_config, "no samples for the input mean");
  for (int c = 0; c < 3; ++c) zerocenter[c] = sum[c] / count;
}

void forward(TypeCNetwork& net, std::span<const Image* const> batch, Mode mode,
             ForwardTrace& t) {
  const int n = static_cast<int>(batch.size());
  if (n < 1) fail(Errc::shape_mismatch, "empty batch");
  if (mode == Mode::train && n < 2)
    fail(Errc::batch_too_small, "batch statistics need at least 2 samples");
  for (const Image* img : batch)
    if (!img || img->width != kInputEdge || img->height != kInputEdge)
      fail(Errc::shape_mismatch, "input images must be 227x227");

  // Input stage: strided subsample with the zerocenter mean removed.  The
  // stride-8 1x1 convolution only ever reads these positions.
  const int s = net.conv1.stride;
  const int edge = strided_out(kInputEdge, s);
  t.x0.resize(n, edge, edge, 3);
  for (int in = 0; in < n; ++in) {
    const Image& img = *batch[in];
    for (int oy = 0; oy < edge; ++oy)
      for (int ox = 0; ox < edge; ++ox) {
        const uint8_t* src = img.pixel(ox * s, oy * s);
        double* dst = t.x0.pixel(in, oy, ox);
        for (int c = 0; c < 3; ++c)
          dst[c] = static_cast<double>(src[c]) - net.zerocenter[c];
      }
  }

  conv_matmul_forward(t.x0, net.conv1, t.c1);
  bn_forward(net.bn1, t.c1, mode, t.bn1c, t.r1);
  relu_inplace(t.r1);

  gather(t.r1, net.conv2.stride, t.g2);
  conv_matmul_forward(t.g2, net.conv2, t.c2);
  bn_forward(net.bn2, t.c2, mode, t.bn2c, t.r2);
  relu_inplace(t.r2);

  conv_matmul_forward(t.r2, net.conv3, t.c3);
  bn_forward(net.bn3, t.c3, mode, t.bn3c, t.final_conv_maps);
  relu_inplace(t.final_conv_maps);

  dense_forward(t.final_conv_maps.v.data(), n, net.fc1, t.fc1_out);
  dense_forward(t.fc1_out.data(), n, net.fc2, t.logits);

  t.probs = Matrix(n, 8);
  for (int r = 0; r < n; ++r) {
    double peak = t.logits(r, 0);
    for (int j = 1; j < 8; ++j) peak = std::max(peak, t.logits(r, j));
    double z = 0.0;
    for (int j = 0; j < 8; ++j) z += std::exp(t.logits(r, j) - peak);
    const double lse = peak + std::log(z);
    for (int j = 0; j < 8; ++j) t.probs(r, j) = std::exp(t.logits(r, j) - lse);
  }
}

double cross_entropy(const ForwardTrace& t, std::span<const int> labels) {
  const int n = t.logits.rows();
  if (static_cast<int>(labels.size()) != n)
    fail(Errc::length_mismatch, "labels do not match the batch");
  double loss = 0.0;
  for (int r = 0; r < n; ++r) {
    double peak = t.logits(r, 0);
    for (int j = 1; j < 8; ++j) peak = std::max(peak, t.logits(r, j));
    double z = 0.0;
    for (int j = 0; j < 8; ++j) z += std::exp(t.logits(r, j) - peak);
    loss += peak + std::log(z) - t.logits(r, labels[r]);
  }
  return loss / n;
}

void backward(TypeCNetwork& net, const ForwardTrace& t,
              std::span<const int> labels) {
  const int n = t.logits.rows();
  if (static_cast<int>(labels.size()) != n)
    fail(Errc::length_mismatch, "labels do not match the batch");

  for (auto& g : net.trainable_params())
    std::fill(g.grad->begin(), g.grad->end(), 0.0);

  Matrix dlogits(n, 8);
  for (int r = 0; r < n; ++r)
    for (int j = 0; j < 8; ++j)
      dlogits(r, j) = (t.probs(r, j) - (labels[r] == j ? 1.0 : 0.0)) / n;

  Matrix dfc1(n, net.fc1.out_f);
  dense_backward(t.fc1_out.data(), n, dlogits, net.fc2, dfc1.data());

  Tensor dr3;
  dr3.resize(n, 8, 8, 36);
  dense_backward(t.final_conv_maps.v.data(), n, dfc1, net.fc1, dr3.v.data());

  relu_backward(t.final_conv_maps, dr3);
  bn_backward(net.bn3, t.bn3c, dr3);

  Tensor dr2;
  conv_matmul_backward(t.r2, dr3, net.conv3, &dr2);

  relu_backward(t.r2, dr2);
  bn_backward(net.bn2, t.bn2c, dr2);

  Tensor dg2;
  conv_matmul_backward(t.g2, dr2, net.conv2, &dg2);

  Tensor dr1;
  dr1.resize(n, t.r1.h, t.r1.w, t.r1.c);
  scatter_add(dg2, net.conv2.stride, dr1);

  relu_backward(t.r1, dr1);
  bn_backward(net.bn1, t.bn1c, dr1);

  conv_matmul_backward(t.x0, dr1, net.conv1, nullptr);
}

SgdOptimizer::SgdOptimizer(TypeCNetwork& net, const TrainConfig& cfg)
    : net_(net), cfg_(cfg) {
  for (auto& g : net_.trainable_params())
    velocity_.emplace_back(g.value->size(), 0.0);
}

void SgdOptimizer::step() {
  auto groups = net_.trainable_params();
  for (size_t gi = 0; gi < groups.size(); ++gi) {
    auto& g = groups[gi];
    auto& vel = velocity_[gi];
    const double wd = g.decay ? cfg_.weight_decay : 0.0;
    for (size_t i = 0; i < vel.size(); ++i) {
      const double grad = (*g.grad)[i] + wd * (*g.value)[i];
      vel[i] = cfg_.momentum * vel[i] - cfg_.learning_rate * grad;
      (*g.value)[i] += vel[i];
    }
  }
}

double train_epoch(TypeCNetwork& net, const Dataset& ds,
                   std::span<const int> indices, const TrainConfig& cfg,
                   SgdOptimizer& opt, Rng& rng) {
  if (indices.empty()) fail(Errc::bad_config, "empty training set");
  if (cfg.batch_size < 2)
    fail(Errc::bad_config, "batch size must be at least 2");

  std::vector<int> order(indices.begin(), indices.end());
  rng.shuffle(order);

  ForwardTrace trace;
  double total = 0.0;
  size_t processed = 0;
  for (size_t start = 0; start < order.size();
       start += static_cast<size_t>(cfg.batch_size)) {
    const size_t stop =
        std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
    if (stop - start < 2) break;  // trailing singleton

    std::vector<const Image*> batch;
    std::vector<int> labels;
    batch.reserve(stop - start);
    labels.reserve(stop - start);
    for (size_t k = start; k < stop; ++k) {
      batch.push_back(&ds.samples[order[k]].image);
      labels.push_back(ds.samples[order[k]].score - kScoreMin);
    }

    forward(net, batch, Mode::train, trace);
    const double loss = cross_entropy(trace, labels);
    if (!std::isfinite(loss))
      fail(Errc::non_finite_loss, "training diverged (loss is not finite)");
    backward(net, trace, labels);
    opt.step();

    total += loss * static_cast<double>(stop - start);
    processed += stop - start;
  }
  if (processed == 0)
    fail(Errc::batch_too_small, "no batch with at least 2 samples");
  return total / static_cast<double>(processed);
}

std::array<double, 8> predict(const TypeCNetwork& net, const Image& image) {
  // Inference never mutates the network.
  auto& mutable_net = const_cast<TypeCNetwork&>(net);
  const Image* batch[1] = {&image};
  ForwardTrace trace;
  forward(mutable_net, batch, Mode::infer, trace);
  std::array<double, 8> out{};
  for (int j = 0; j < 8; ++j) out[j] = trace.probs(0, j);
  return out;
}

}  // namespace photoscore

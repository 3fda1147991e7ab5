#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "cansig/errors.hpp"
#include "cansig/matrix.hpp"

namespace cansig {

/// Architecture and training hyperparameters of one autoencoder. The five
/// filter counts cover the whole conv stack: two encoder stages, two decoder
/// stages, and a single-filter head. Hidden activations are rectifiers, the
/// head is logistic so outputs live in (0,1) like the normalized inputs.
struct AeConfig {
  int input_rows = 0;  // m
  int input_cols = 0;  // w
  std::array<int, 5> filters{32, 16, 16, 32, 1};
  int kernel_rows = 3;
  int kernel_cols = 3;
  int epochs = 25;
  int batch_size = 32;
  double learning_rate = 0.05;
  double momentum = 0.9;
  int patience = 10;  // early stop after this many epochs without val improvement
  uint32_t seed = 1;

  long long parameter_count() const {
    long long total = 0;
    int in_ch = 1;
    for (int f : filters) {
      total += (static_cast<long long>(kernel_rows) * kernel_cols * in_ch + 1) * f;
      in_ch = f;
    }
    return total;
  }
};

/// Elementwise |x - xhat| between a view and its reconstruction.
struct LossMatrix {
  Matrix<float> grid;
  long long origin_step = 0;
  int period = 1;
};

inline Matrix<float> reconstruction_loss(const Matrix<float>& view,
                                         const Matrix<float>& reconstruction) {
  return absolute_difference(view, reconstruction);
}

/// Five-layer convolutional autoencoder on m x w single-channel images:
/// conv-relu, avgpool/2, conv-relu, avgpool/2, conv-relu, upsample x2,
/// conv-relu, upsample x2, conv-sigmoid. Same-padding everywhere; odd input
/// extents are ceil-pooled and cropped back after upsampling, so the output
/// shape always equals the input shape.
///
/// Scalar is float in production; tests instantiate double for finite
/// difference gradient checks.
template <typename Scalar = float>
class ConvAutoencoder {
 public:
  struct ConvLayer {
    int in_ch = 0, out_ch = 0, kh = 0, kw = 0;
    std::vector<Scalar> w;   // [out][in][kh][kw]
    std::vector<Scalar> b;   // [out]
    std::vector<Scalar> gw, gb;  // gradient accumulators
    std::vector<Scalar> vw, vb;  // momentum velocities

    size_t weight_count() const { return w.size(); }
  };

  /// Scratch tensors for one forward/backward pass. Reusable across calls;
  /// not shared between threads.
  struct Workspace {
    Tensor3<Scalar> a0, a1, p1, a2, p2, a3, u3, a4, u4, y;
    Tensor3<Scalar> d0, d1, dp1, d2, dp2, d3, du3, d4, du4, dy;
    std::array<Tensor3<Scalar>, 5> padded;   // conv inputs, zero border
    std::array<Tensor3<Scalar>, 5> dpadded;  // gradients of the padded inputs
  };

  ConvAutoencoder() = default;

  ConvAutoencoder(const AeConfig& cfg, int period) : cfg_(cfg), period_(period) {
    validate_config(cfg);
    h0_ = cfg.input_rows;
    w0_ = cfg.input_cols;
    h1_ = (h0_ + 1) / 2;
    w1_ = (w0_ + 1) / 2;
    h2_ = (h1_ + 1) / 2;
    w2_ = (w1_ + 1) / 2;
    init_layers();
  }

  static void validate_config(const AeConfig& cfg) {
    if (cfg.filters.back() != 1) {
      throw ConfigError("final conv layer must have exactly 1 filter");
    }
    if (cfg.kernel_rows % 2 == 0 || cfg.kernel_cols % 2 == 0) {
      throw ConfigError("kernel extents must be odd for same-padding");
    }
    const int min_rows = std::max(4, cfg.kernel_rows);
    const int min_cols = std::max(4, cfg.kernel_cols);
    if (cfg.input_rows < min_rows || cfg.input_cols < min_cols) {
      throw ShapeUnderflow("input " + std::to_string(cfg.input_rows) + "x" +
                           std::to_string(cfg.input_cols) +
                           " too small to downsample twice");
    }
  }

  const AeConfig& config() const { return cfg_; }
  int period() const { return period_; }
  long long parameter_count() const { return cfg_.parameter_count(); }
  const std::vector<double>& training_history() const { return history_; }

  Workspace make_workspace() const {
    Workspace ws;
    const int f0 = cfg_.filters[0], f1 = cfg_.filters[1], f2 = cfg_.filters[2],
              f3 = cfg_.filters[3];
    ws.a0 = Tensor3<Scalar>(1, h0_, w0_);
    ws.a1 = Tensor3<Scalar>(f0, h0_, w0_);
    ws.p1 = Tensor3<Scalar>(f0, h1_, w1_);
    ws.a2 = Tensor3<Scalar>(f1, h1_, w1_);
    ws.p2 = Tensor3<Scalar>(f1, h2_, w2_);
    ws.a3 = Tensor3<Scalar>(f2, h2_, w2_);
    ws.u3 = Tensor3<Scalar>(f2, h1_, w1_);
    ws.a4 = Tensor3<Scalar>(f3, h1_, w1_);
    ws.u4 = Tensor3<Scalar>(f3, h0_, w0_);
    ws.y = Tensor3<Scalar>(1, h0_, w0_);
    ws.d0 = Tensor3<Scalar>(1, h0_, w0_);
    ws.d1 = Tensor3<Scalar>(f0, h0_, w0_);
    ws.dp1 = Tensor3<Scalar>(f0, h1_, w1_);
    ws.d2 = Tensor3<Scalar>(f1, h1_, w1_);
    ws.dp2 = Tensor3<Scalar>(f1, h2_, w2_);
    ws.d3 = Tensor3<Scalar>(f2, h2_, w2_);
    ws.du3 = Tensor3<Scalar>(f2, h1_, w1_);
    ws.d4 = Tensor3<Scalar>(f3, h1_, w1_);
    ws.du4 = Tensor3<Scalar>(f3, h0_, w0_);
    ws.dy = Tensor3<Scalar>(1, h0_, w0_);
    const int ph = cfg_.kernel_rows / 2, pw = cfg_.kernel_cols / 2;
    const std::array<std::array<int, 3>, 5> in_dims{{{1, h0_, w0_},
                                                     {f0, h1_, w1_},
                                                     {f1, h2_, w2_},
                                                     {f2, h1_, w1_},
                                                     {f3, h0_, w0_}}};
    for (int l = 0; l < 5; ++l) {
      ws.padded[l] = Tensor3<Scalar>(in_dims[l][0], in_dims[l][1] + 2 * ph,
                                     in_dims[l][2] + 2 * pw);
      ws.dpadded[l] = ws.padded[l];
    }
    return ws;
  }

  /// Deterministic forward pass; output has the input's shape, entries in (0,1).
  Matrix<float> reconstruct(const Matrix<float>& view) const {
    Workspace ws = make_workspace();
    return reconstruct(view, ws);
  }

  Matrix<float> reconstruct(const Matrix<float>& view, Workspace& ws) const {
    forward(view, ws);
    Matrix<float> out(h0_, w0_);
    const Scalar* y = ws.y.plane(0);
    for (size_t i = 0; i < out.size(); ++i) {
      out.data()[i] = static_cast<float>(y[i]);
    }
    return out;
  }

  /// Mean squared reconstruction error of one view (forward only).
  double sample_loss(const Matrix<float>& view, Workspace& ws) const {
    forward(view, ws);
    const Scalar* y = ws.y.plane(0);
    double acc = 0.0;
    for (size_t i = 0; i < view.size(); ++i) {
      const double d = static_cast<double>(y[i]) - static_cast<double>(view.data()[i]);
      acc += d * d;
    }
    return acc / static_cast<double>(view.size());
  }

  double batch_loss(const std::vector<Matrix<float>>& views, Workspace& ws) const {
    double acc = 0.0;
    for (const auto& v : views) acc += sample_loss(v, ws);
    return views.empty() ? 0.0 : acc / static_cast<double>(views.size());
  }

  /// Zero the gradient accumulators, run forward/backward over the batch,
  /// and leave d(mean loss)/d(params) in each layer's gw/gb. Returns the
  /// mean loss. Exposed so tests can compare against finite differences.
  double batch_gradients(const std::vector<Matrix<float>>& views, Workspace& ws) {
    for (auto& l : layers_) {
      std::fill(l.gw.begin(), l.gw.end(), Scalar(0));
      std::fill(l.gb.begin(), l.gb.end(), Scalar(0));
    }
    double acc = 0.0;
    const Scalar inv_n = Scalar(1) / static_cast<Scalar>(views.size());
    for (const auto& v : views) {
      acc += forward_backward(v, ws, inv_n);
    }
    return acc / static_cast<double>(views.size());
  }

  struct TrainResult {
    int epochs_run = 0;
    bool early_stopped = false;
    double final_train_loss = 0.0;
    double best_val_loss = 0.0;
  };

  /// Mini-batch momentum SGD on the mean squared reconstruction error.
  /// Stops early when validation loss has not improved for cfg.patience
  /// epochs; with no validation set the training loss is used.
  TrainResult train(const std::vector<Matrix<float>>& train_views,
                    const std::vector<Matrix<float>>& val_views) {
    TrainResult result;
    if (cfg_.epochs == 0) return result;
    if (train_views.empty()) throw EmptyStream("train: no views");
    for (const auto& v : train_views) check_shape(v);
    for (const auto& v : val_views) check_shape(v);

    Workspace ws = make_workspace();
    std::mt19937 shuffle_rng(cfg_.seed ^ 0x5bd1e995u);
    std::vector<size_t> idx(train_views.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;

    double best_val = std::numeric_limits<double>::infinity();
    int stale_epochs = 0;
    for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
      std::shuffle(idx.begin(), idx.end(), shuffle_rng);
      double epoch_loss = 0.0;
      size_t seen = 0;
      for (size_t start = 0; start < idx.size(); start += cfg_.batch_size) {
        const size_t end = std::min(idx.size(), start + cfg_.batch_size);
        for (auto& l : layers_) {
          std::fill(l.gw.begin(), l.gw.end(), Scalar(0));
          std::fill(l.gb.begin(), l.gb.end(), Scalar(0));
        }
        const Scalar inv_n = Scalar(1) / static_cast<Scalar>(end - start);
        for (size_t k = start; k < end; ++k) {
          epoch_loss += forward_backward(train_views[idx[k]], ws, inv_n);
          ++seen;
        }
        apply_update();
      }
      epoch_loss /= static_cast<double>(seen);
      if (!std::isfinite(epoch_loss)) {
        throw NonFiniteLoss("training diverged at epoch " + std::to_string(epoch),
                            epoch);
      }
      history_.push_back(epoch_loss);
      result.epochs_run = epoch + 1;
      result.final_train_loss = epoch_loss;

      const double val_loss =
          val_views.empty() ? epoch_loss : batch_loss(val_views, ws);
      if (!std::isfinite(val_loss)) {
        throw NonFiniteLoss("validation loss non-finite at epoch " +
                                std::to_string(epoch),
                            epoch);
      }
      if (val_loss < best_val) {
        best_val = val_loss;
        stale_epochs = 0;
      } else if (++stale_epochs >= cfg_.patience) {
        result.early_stopped = true;
        break;
      }
    }
    result.best_val_loss = best_val;
    return result;
  }

  /// Parameter tensors in declaration order (w then b per layer), matching
  /// the serialized layout. Gradient tensors line up index for index.
  std::vector<std::vector<Scalar>*> parameter_tensors() {
    std::vector<std::vector<Scalar>*> out;
    for (auto& l : layers_) {
      out.push_back(&l.w);
      out.push_back(&l.b);
    }
    return out;
  }
  std::vector<std::vector<Scalar>*> gradient_tensors() {
    std::vector<std::vector<Scalar>*> out;
    for (auto& l : layers_) {
      out.push_back(&l.gw);
      out.push_back(&l.gb);
    }
    return out;
  }

  static constexpr char kMagic[8] = {'C', 'A', 'N', 'S', 'A', 'E', '1', '\0'};

  /// Self-describing binary: magic, m, w, period, then per-layer specs and
  /// row-major float32 tensors in declaration order.
  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open " + path + " for writing");
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, static_cast<uint32_t>(h0_));
    write_u32(out, static_cast<uint32_t>(w0_));
    write_u32(out, static_cast<uint32_t>(period_));
    write_u32(out, static_cast<uint32_t>(layers_.size()));
    for (const auto& l : layers_) {
      write_u32(out, static_cast<uint32_t>(l.in_ch));
      write_u32(out, static_cast<uint32_t>(l.out_ch));
      write_u32(out, static_cast<uint32_t>(l.kh));
      write_u32(out, static_cast<uint32_t>(l.kw));
    }
    for (const auto& l : layers_) {
      write_tensor(out, l.w);
      write_tensor(out, l.b);
    }
    if (!out) throw DataError("write failed: " + path);
  }

  static ConvAutoencoder load(const std::string& path, const AeConfig& expected,
                              int expected_period) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("cannot open model file " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
      throw ArtifactMismatch(path + ": bad magic, not a model file");
    }
    const uint32_t m = read_u32(in), w = read_u32(in), period = read_u32(in),
                   n_layers = read_u32(in);
    if (m != static_cast<uint32_t>(expected.input_rows) ||
        w != static_cast<uint32_t>(expected.input_cols)) {
      throw ArtifactMismatch(path + ": model is " + std::to_string(m) + "x" +
                             std::to_string(w) + ", config expects " +
                             std::to_string(expected.input_rows) + "x" +
                             std::to_string(expected.input_cols));
    }
    if (period != static_cast<uint32_t>(expected_period)) {
      throw ArtifactMismatch(path + ": model period " + std::to_string(period) +
                             ", expected " + std::to_string(expected_period));
    }
    ConvAutoencoder model(expected, expected_period);
    if (n_layers != model.layers_.size()) {
      throw ArtifactMismatch(path + ": layer count mismatch");
    }
    for (auto& l : model.layers_) {
      const uint32_t in_ch = read_u32(in), out_ch = read_u32(in),
                     kh = read_u32(in), kw = read_u32(in);
      if (in_ch != static_cast<uint32_t>(l.in_ch) ||
          out_ch != static_cast<uint32_t>(l.out_ch) ||
          kh != static_cast<uint32_t>(l.kh) || kw != static_cast<uint32_t>(l.kw)) {
        throw ArtifactMismatch(path + ": layer spec mismatch");
      }
    }
    for (auto& l : model.layers_) {
      read_tensor(in, l.w);
      read_tensor(in, l.b);
    }
    if (!in) throw ArtifactMismatch(path + ": truncated model file");
    return model;
  }

 private:
  void init_layers() {
    const std::array<int, 6> chain{1, cfg_.filters[0], cfg_.filters[1],
                                   cfg_.filters[2], cfg_.filters[3],
                                   cfg_.filters[4]};
    std::mt19937 rng(cfg_.seed);
    for (int l = 0; l < 5; ++l) {
      ConvLayer layer;
      layer.in_ch = chain[l];
      layer.out_ch = chain[l + 1];
      layer.kh = cfg_.kernel_rows;
      layer.kw = cfg_.kernel_cols;
      const size_t n = static_cast<size_t>(layer.out_ch) * layer.in_ch *
                       layer.kh * layer.kw;
      layer.w.resize(n);
      layer.b.assign(layer.out_ch, Scalar(0));
      const double fan_in = static_cast<double>(layer.in_ch) * layer.kh * layer.kw;
      const double fan_out = static_cast<double>(layer.out_ch) * layer.kh * layer.kw;
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      for (auto& wv : layer.w) {
        // fixed-arithmetic uniform in (-limit, limit); reproducible across
        // standard library implementations, unlike uniform_real_distribution
        const double u = static_cast<double>(rng()) / 4294967296.0;
        wv = static_cast<Scalar>((2.0 * u - 1.0) * limit);
      }
      layer.gw.assign(n, Scalar(0));
      layer.gb.assign(layer.out_ch, Scalar(0));
      layer.vw.assign(n, Scalar(0));
      layer.vb.assign(layer.out_ch, Scalar(0));
      layers_[l] = std::move(layer);
    }
  }

  void check_shape(const Matrix<float>& v) const {
    if (v.rows() != h0_ || v.cols() != w0_) {
      throw ShapeMismatch("view is " + std::to_string(v.rows()) + "x" +
                          std::to_string(v.cols()) + ", model expects " +
                          std::to_string(h0_) + "x" + std::to_string(w0_));
    }
  }

  // --- elementary ops -------------------------------------------------

  void pad_into(const Tensor3<Scalar>& src, Tensor3<Scalar>& dst) const {
    const int ph = cfg_.kernel_rows / 2, pw = cfg_.kernel_cols / 2;
    dst.zero();
    for (int c = 0; c < src.channels(); ++c) {
      for (int y = 0; y < src.height(); ++y) {
        std::copy_n(src.plane(c) + static_cast<size_t>(y) * src.width(),
                    src.width(),
                    dst.plane(c) +
                        static_cast<size_t>(y + ph) * dst.width() + pw);
      }
    }
  }

  void conv_forward(const ConvLayer& l, const Tensor3<Scalar>& padded,
                    Tensor3<Scalar>& out) const {
    const int oh = out.height(), ow = out.width();
    const int pw_stride = padded.width();
    for (int oc = 0; oc < l.out_ch; ++oc) {
      Scalar* op = out.plane(oc);
      std::fill_n(op, static_cast<size_t>(oh) * ow, l.b[oc]);
      for (int ic = 0; ic < l.in_ch; ++ic) {
        const Scalar* ip = padded.plane(ic);
        const Scalar* wbase =
            l.w.data() + (static_cast<size_t>(oc) * l.in_ch + ic) * l.kh * l.kw;
        for (int ky = 0; ky < l.kh; ++ky) {
          for (int kx = 0; kx < l.kw; ++kx) {
            const Scalar wv = wbase[ky * l.kw + kx];
            for (int y = 0; y < oh; ++y) {
              const Scalar* irow = ip + static_cast<size_t>(y + ky) * pw_stride + kx;
              Scalar* orow = op + static_cast<size_t>(y) * ow;
              for (int x = 0; x < ow; ++x) {
                orow[x] += wv * irow[x];
              }
            }
          }
        }
      }
    }
  }

  void conv_backward(ConvLayer& l, const Tensor3<Scalar>& padded,
                     const Tensor3<Scalar>& dout, Tensor3<Scalar>& dpadded,
                     Scalar scale) const {
    const int oh = dout.height(), ow = dout.width();
    const int pw_stride = padded.width();
    dpadded.zero();
    for (int oc = 0; oc < l.out_ch; ++oc) {
      const Scalar* dop = dout.plane(oc);
      Scalar gb = 0;
      for (size_t i = 0; i < static_cast<size_t>(oh) * ow; ++i) gb += dop[i];
      l.gb[oc] += scale * gb;
      for (int ic = 0; ic < l.in_ch; ++ic) {
        const Scalar* ip = padded.plane(ic);
        Scalar* dip = dpadded.plane(ic);
        const size_t wofs = (static_cast<size_t>(oc) * l.in_ch + ic) * l.kh * l.kw;
        for (int ky = 0; ky < l.kh; ++ky) {
          for (int kx = 0; kx < l.kw; ++kx) {
            const Scalar wv = l.w[wofs + ky * l.kw + kx];
            Scalar gw = 0;
            for (int y = 0; y < oh; ++y) {
              const Scalar* irow = ip + static_cast<size_t>(y + ky) * pw_stride + kx;
              Scalar* dirow = dip + static_cast<size_t>(y + ky) * pw_stride + kx;
              const Scalar* dorow = dop + static_cast<size_t>(y) * ow;
              for (int x = 0; x < ow; ++x) {
                gw += dorow[x] * irow[x];
                dirow[x] += wv * dorow[x];
              }
            }
            l.gw[wofs + ky * l.kw + kx] += scale * gw;
          }
        }
      }
    }
  }

  void unpad_into(const Tensor3<Scalar>& dpadded, Tensor3<Scalar>& dst) const {
    const int ph = cfg_.kernel_rows / 2, pw = cfg_.kernel_cols / 2;
    for (int c = 0; c < dst.channels(); ++c) {
      for (int y = 0; y < dst.height(); ++y) {
        std::copy_n(dpadded.plane(c) +
                        static_cast<size_t>(y + ph) * dpadded.width() + pw,
                    dst.width(),
                    dst.plane(c) + static_cast<size_t>(y) * dst.width());
      }
    }
  }

  static void relu(Tensor3<Scalar>& t) {
    for (auto& v : t.data()) v = v > Scalar(0) ? v : Scalar(0);
  }

  // d(pre-activation) = d(post) masked by activation sign
  static void relu_backward(const Tensor3<Scalar>& activated, Tensor3<Scalar>& d) {
    const auto& a = activated.data();
    auto& g = d.data();
    for (size_t i = 0; i < g.size(); ++i) {
      if (a[i] <= Scalar(0)) g[i] = Scalar(0);
    }
  }

  static void sigmoid(Tensor3<Scalar>& t) {
    for (auto& v : t.data()) v = Scalar(1) / (Scalar(1) + std::exp(-v));
  }

  static void sigmoid_backward(const Tensor3<Scalar>& y, Tensor3<Scalar>& d) {
    const auto& yv = y.data();
    auto& g = d.data();
    for (size_t i = 0; i < g.size(); ++i) {
      g[i] *= yv[i] * (Scalar(1) - yv[i]);
    }
  }

  /// 2x2 mean pooling with ceil semantics: edge windows shrink instead of
  /// padding, so pooled extent is ceil(n/2).
  static void avgpool(const Tensor3<Scalar>& in, Tensor3<Scalar>& out) {
    const int ih = in.height(), iw = in.width();
    for (int c = 0; c < in.channels(); ++c) {
      const Scalar* ip = in.plane(c);
      Scalar* op = out.plane(c);
      for (int y = 0; y < out.height(); ++y) {
        const int y0 = 2 * y, y1 = std::min(2 * y + 2, ih);
        for (int x = 0; x < out.width(); ++x) {
          const int x0 = 2 * x, x1 = std::min(2 * x + 2, iw);
          Scalar acc = 0;
          for (int yy = y0; yy < y1; ++yy) {
            for (int xx = x0; xx < x1; ++xx) {
              acc += ip[static_cast<size_t>(yy) * iw + xx];
            }
          }
          op[static_cast<size_t>(y) * out.width() + x] =
              acc / static_cast<Scalar>((y1 - y0) * (x1 - x0));
        }
      }
    }
  }

  static void avgpool_backward(const Tensor3<Scalar>& dout, Tensor3<Scalar>& din) {
    const int ih = din.height(), iw = din.width();
    din.zero();
    for (int c = 0; c < din.channels(); ++c) {
      const Scalar* dop = dout.plane(c);
      Scalar* dip = din.plane(c);
      for (int y = 0; y < dout.height(); ++y) {
        const int y0 = 2 * y, y1 = std::min(2 * y + 2, ih);
        for (int x = 0; x < dout.width(); ++x) {
          const int x0 = 2 * x, x1 = std::min(2 * x + 2, iw);
          const Scalar g = dop[static_cast<size_t>(y) * dout.width() + x] /
                           static_cast<Scalar>((y1 - y0) * (x1 - x0));
          for (int yy = y0; yy < y1; ++yy) {
            for (int xx = x0; xx < x1; ++xx) {
              dip[static_cast<size_t>(yy) * iw + xx] += g;
            }
          }
        }
      }
    }
  }

  /// Nearest-neighbour x2 upsampling cropped to the encoder stage's extent.
  static void upsample(const Tensor3<Scalar>& in, Tensor3<Scalar>& out) {
    const int iw = in.width();
    for (int c = 0; c < in.channels(); ++c) {
      const Scalar* ip = in.plane(c);
      Scalar* op = out.plane(c);
      for (int y = 0; y < out.height(); ++y) {
        const Scalar* irow = ip + static_cast<size_t>(y / 2) * iw;
        Scalar* orow = op + static_cast<size_t>(y) * out.width();
        for (int x = 0; x < out.width(); ++x) {
          orow[x] = irow[x / 2];
        }
      }
    }
  }

  static void upsample_backward(const Tensor3<Scalar>& dout, Tensor3<Scalar>& din) {
    const int iw = din.width();
    din.zero();
    for (int c = 0; c < din.channels(); ++c) {
      Scalar* dip = din.plane(c);
      const Scalar* dop = dout.plane(c);
      for (int y = 0; y < dout.height(); ++y) {
        Scalar* dirow = dip + static_cast<size_t>(y / 2) * iw;
        const Scalar* dorow = dop + static_cast<size_t>(y) * dout.width();
        for (int x = 0; x < dout.width(); ++x) {
          dirow[x / 2] += dorow[x];
        }
      }
    }
  }

  // --- passes ----------------------------------------------------------

  void forward(const Matrix<float>& view, Workspace& ws) const {
    check_shape(view);
    Scalar* a0 = ws.a0.plane(0);
    for (size_t i = 0; i < view.size(); ++i) {
      a0[i] = static_cast<Scalar>(view.data()[i]);
    }
    pad_into(ws.a0, ws.padded[0]);
    conv_forward(layers_[0], ws.padded[0], ws.a1);
    relu(ws.a1);
    avgpool(ws.a1, ws.p1);
    pad_into(ws.p1, ws.padded[1]);
    conv_forward(layers_[1], ws.padded[1], ws.a2);
    relu(ws.a2);
    avgpool(ws.a2, ws.p2);
    pad_into(ws.p2, ws.padded[2]);
    conv_forward(layers_[2], ws.padded[2], ws.a3);
    relu(ws.a3);
    upsample(ws.a3, ws.u3);
    pad_into(ws.u3, ws.padded[3]);
    conv_forward(layers_[3], ws.padded[3], ws.a4);
    relu(ws.a4);
    upsample(ws.a4, ws.u4);
    pad_into(ws.u4, ws.padded[4]);
    conv_forward(layers_[4], ws.padded[4], ws.y);
    sigmoid(ws.y);
  }

  /// One sample's forward + backward; gradients of (scale * sample MSE)
  /// accumulate into gw/gb. Returns the sample loss.
  double forward_backward(const Matrix<float>& view, Workspace& ws, Scalar scale) {
    forward(view, ws);
    const size_t n = view.size();
    const Scalar* y = ws.y.plane(0);
    Scalar* dy = ws.dy.plane(0);
    double loss = 0.0;
    const Scalar k = Scalar(2) / static_cast<Scalar>(n);
    for (size_t i = 0; i < n; ++i) {
      const Scalar diff = y[i] - static_cast<Scalar>(view.data()[i]);
      loss += static_cast<double>(diff) * static_cast<double>(diff);
      dy[i] = k * diff;
    }
    loss /= static_cast<double>(n);

    sigmoid_backward(ws.y, ws.dy);
    conv_backward(layers_[4], ws.padded[4], ws.dy, ws.dpadded[4], scale);
    unpad_into(ws.dpadded[4], ws.du4);
    upsample_backward(ws.du4, ws.d4);
    relu_backward(ws.a4, ws.d4);
    conv_backward(layers_[3], ws.padded[3], ws.d4, ws.dpadded[3], scale);
    unpad_into(ws.dpadded[3], ws.du3);
    upsample_backward(ws.du3, ws.d3);
    relu_backward(ws.a3, ws.d3);
    conv_backward(layers_[2], ws.padded[2], ws.d3, ws.dpadded[2], scale);
    unpad_into(ws.dpadded[2], ws.dp2);
    avgpool_backward(ws.dp2, ws.d2);
    relu_backward(ws.a2, ws.d2);
    conv_backward(layers_[1], ws.padded[1], ws.d2, ws.dpadded[1], scale);
    unpad_into(ws.dpadded[1], ws.dp1);
    avgpool_backward(ws.dp1, ws.d1);
    relu_backward(ws.a1, ws.d1);
    conv_backward(layers_[0], ws.padded[0], ws.d1, ws.dpadded[0], scale);
    return loss;
  }

  void apply_update() {
    const Scalar lr = static_cast<Scalar>(cfg_.learning_rate);
    const Scalar mu = static_cast<Scalar>(cfg_.momentum);
    for (auto& l : layers_) {
      for (size_t i = 0; i < l.w.size(); ++i) {
        l.vw[i] = mu * l.vw[i] - lr * l.gw[i];
        l.w[i] += l.vw[i];
      }
      for (size_t i = 0; i < l.b.size(); ++i) {
        l.vb[i] = mu * l.vb[i] - lr * l.gb[i];
        l.b[i] += l.vb[i];
      }
    }
  }

  // --- serialization helpers -------------------------------------------

  static void write_u32(std::ofstream& out, uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static uint32_t read_u32(std::ifstream& in) {
    uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
  }
  static void write_tensor(std::ofstream& out, const std::vector<Scalar>& t) {
    for (Scalar v : t) {
      const float f = static_cast<float>(v);
      out.write(reinterpret_cast<const char*>(&f), sizeof(f));
    }
  }
  static void read_tensor(std::ifstream& in, std::vector<Scalar>& t) {
    for (auto& v : t) {
      float f = 0;
      in.read(reinterpret_cast<char*>(&f), sizeof(f));
      v = static_cast<Scalar>(f);
    }
  }

  AeConfig cfg_;
  int period_ = 1;
  int h0_ = 0, w0_ = 0, h1_ = 0, w1_ = 0, h2_ = 0, w2_ = 0;
  std::array<ConvLayer, 5> layers_;
  std::vector<double> history_;
};

using Autoencoder = ConvAutoencoder<float>;

}  // namespace cansig

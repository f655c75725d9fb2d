#include "affekt/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "affekt/error.hpp"

namespace affekt {

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return Tensor{std::move(shape), std::vector<double>(n, 0.0)};
}

const Tensor& ModelParams::at(std::string_view name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.tensor;
  }
  throw Error(ErrorKind::ShapeMismatch, "no parameter tensor named '" + std::string(name) + "'");
}

Tensor& ModelParams::at(std::string_view name) {
  return const_cast<Tensor&>(static_cast<const ModelParams&>(*this).at(name));
}

void CnnConfig::validate() const {
  if (input_channels < 1 || input_bins < 1) throw Error(ErrorKind::InvalidParams, "CNN input must be at least 1x1");
  if (n_classes < 2) throw Error(ErrorKind::InvalidParams, "CNN needs at least 2 classes");
  if (blocks.empty()) throw Error(ErrorKind::InvalidParams, "CNN needs at least one block");
  int in_width = 1;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const auto& b = blocks[i];
    if (b.out_width < 1) throw Error(ErrorKind::InvalidParams, "block widths must be >= 1");
    if (b.stride != 1 && b.stride != 2) throw Error(ErrorKind::InvalidParams, "block stride must be 1 or 2");
    if (b.residual && (b.stride != 1 || b.out_width != in_width)) {
      throw Error(ErrorKind::InvalidParams,
                  "residual block " + std::to_string(i) + " needs stride 1 and equal input/output width");
    }
    in_width = b.out_width;
  }
}

CnnConfig CnnConfig::desk_scale(int input_channels, int input_bins, int n_classes, std::uint64_t seed) {
  CnnConfig c;
  c.input_channels = input_channels;
  c.input_bins = input_bins;
  c.n_classes = n_classes;
  c.seed = seed;
  c.blocks = {{4, 2, false}, {8, 2, false}, {8, 2, false}, {8, 1, true}};
  return c;
}

namespace {

struct LayerShape {
  int cin, h, w;
  int cout, ho, wo;
  int stride;
  bool residual;
};

std::vector<LayerShape> layer_shapes(const CnnConfig& config) {
  std::vector<LayerShape> out;
  int c = 1;
  int h = config.input_channels;
  int w = config.input_bins;
  for (const auto& b : config.blocks) {
    const int ho = (h - 1) / b.stride + 1;
    const int wo = (w - 1) / b.stride + 1;
    out.push_back({c, h, w, b.out_width, ho, wo, b.stride, b.residual});
    c = b.out_width;
    h = ho;
    w = wo;
  }
  return out;
}

std::string block_name(std::size_t i, const char* what) { return "block" + std::to_string(i) + "." + what; }

// Output index range [lo, hi) whose tap offset `k` (0..2) lands inside [0, n).
std::pair<int, int> valid_range(int k, int n, int stride, int n_out) {
  const int shift = k - 1;
  const int lo = shift < 0 ? (-shift + stride - 1) / stride : 0;
  const int last = n - 1 - shift;
  const int hi = last < 0 ? 0 : std::min(n_out, last / stride + 1);
  return {lo, std::max(lo, hi)};
}

void conv_forward(const LayerShape& L, const double* x, const double* kernel, const double* bias, double* z) {
  const int plane_out = L.ho * L.wo;
  for (int co = 0; co < L.cout; ++co) std::fill(z + co * plane_out, z + (co + 1) * plane_out, bias[co]);
  for (int co = 0; co < L.cout; ++co) {
    double* zc = z + co * plane_out;
    for (int ci = 0; ci < L.cin; ++ci) {
      const double* xc = x + ci * L.h * L.w;
      const double* k = kernel + (co * L.cin + ci) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const auto [oy0, oy1] = valid_range(ky, L.h, L.stride, L.ho);
        for (int kx = 0; kx < 3; ++kx) {
          const double wgt = k[ky * 3 + kx];
          const auto [ox0, ox1] = valid_range(kx, L.w, L.stride, L.wo);
          for (int oy = oy0; oy < oy1; ++oy) {
            const double* xr = xc + (oy * L.stride + ky - 1) * L.w;
            double* zr = zc + oy * L.wo;
            if (L.stride == 1) {
              for (int ox = ox0; ox < ox1; ++ox) zr[ox] += wgt * xr[ox + kx - 1];
            } else {
              for (int ox = ox0; ox < ox1; ++ox) zr[ox] += wgt * xr[ox * L.stride + kx - 1];
            }
          }
        }
      }
    }
  }
}

// Accumulates kernel and bias gradients and, when dx is non-null, the input gradient.
void conv_backward(const LayerShape& L, const double* x, const double* kernel, const double* dz, double* dkernel,
                   double* dbias, double* dx) {
  const int plane_out = L.ho * L.wo;
  for (int co = 0; co < L.cout; ++co) {
    const double* dzc = dz + co * plane_out;
    double sum = 0.0;
    for (int i = 0; i < plane_out; ++i) sum += dzc[i];
    dbias[co] += sum;
    for (int ci = 0; ci < L.cin; ++ci) {
      const double* xc = x + ci * L.h * L.w;
      double* dxc = dx ? dx + ci * L.h * L.w : nullptr;
      const double* k = kernel + (co * L.cin + ci) * 9;
      double* dk = dkernel + (co * L.cin + ci) * 9;
      for (int ky = 0; ky < 3; ++ky) {
        const auto [oy0, oy1] = valid_range(ky, L.h, L.stride, L.ho);
        for (int kx = 0; kx < 3; ++kx) {
          const double wgt = k[ky * 3 + kx];
          const auto [ox0, ox1] = valid_range(kx, L.w, L.stride, L.wo);
          double acc = 0.0;
          for (int oy = oy0; oy < oy1; ++oy) {
            const int row = (oy * L.stride + ky - 1) * L.w;
            const double* xr = xc + row;
            const double* dzr = dzc + oy * L.wo;
            const int s = L.stride;
            const int shift = kx - 1;
            for (int ox = ox0; ox < ox1; ++ox) acc += dzr[ox] * xr[ox * s + shift];
            if (dxc) {
              double* dxr = dxc + row;
              for (int ox = ox0; ox < ox1; ++ox) dxr[ox * s + shift] += wgt * dzr[ox];
            }
          }
          dk[ky * 3 + kx] += acc;
        }
      }
    }
  }
}

// Activations kept for one sample's backward pass.
struct SampleTrace {
  std::vector<std::vector<double>> block_in;  // input of block b
  std::vector<std::vector<double>> pre;       // conv + bias, before ReLU
  std::vector<double> pooled;
  std::vector<double> logits;
};

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

void check_input(const CnnConfig& config, std::span<const double> input) {
  const auto want = static_cast<std::size_t>(config.input_channels) * static_cast<std::size_t>(config.input_bins);
  if (input.size() != want) {
    throw Error(ErrorKind::ShapeMismatch, "input has " + std::to_string(input.size()) + " values, model expects " +
                                              std::to_string(config.input_channels) + " x " +
                                              std::to_string(config.input_bins));
  }
  if (!std::all_of(input.begin(), input.end(), [](double x) { return std::isfinite(x); })) {
    throw Error(ErrorKind::NonFiniteActivation, "non-finite value in model input");
  }
}

SampleTrace run_sample(const CnnConfig& config, const std::vector<LayerShape>& shapes, const ModelParams& params,
                       std::span<const double> input) {
  check_input(config, input);
  SampleTrace t;
  std::vector<double> x(input.begin(), input.end());
  for (std::size_t b = 0; b < shapes.size(); ++b) {
    const auto& L = shapes[b];
    std::vector<double> z(static_cast<std::size_t>(L.cout * L.ho * L.wo));
    conv_forward(L, x.data(), params.at(block_name(b, "kernel")).values.data(),
                 params.at(block_name(b, "bias")).values.data(), z.data());
    std::vector<double> y(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) y[i] = std::max(0.0, z[i]);
    if (L.residual) {
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += x[i];
    }
    t.block_in.push_back(std::move(x));
    t.pre.push_back(std::move(z));
    x = std::move(y);
  }
  const auto& last = shapes.back();
  const int plane = last.ho * last.wo;
  t.pooled.assign(static_cast<std::size_t>(last.cout), 0.0);
  for (int c = 0; c < last.cout; ++c) {
    double sum = 0.0;
    for (int i = 0; i < plane; ++i) sum += x[static_cast<std::size_t>(c * plane + i)];
    t.pooled[static_cast<std::size_t>(c)] = sum / plane;
  }
  const auto& W = params.at("dense.weight").values;
  const auto& bias = params.at("dense.bias").values;
  const auto K = static_cast<std::size_t>(config.n_classes);
  const std::size_t D = t.pooled.size();
  t.logits.assign(K, 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    double s = bias[k];
    for (std::size_t d = 0; d < D; ++d) s += W[k * D + d] * t.pooled[d];
    t.logits[k] = s;
  }
  if (!all_finite(t.logits) || !all_finite(t.pooled)) {
    throw Error(ErrorKind::NonFiniteActivation, "non-finite activation in forward pass");
  }
  return t;
}

void softmax_in_place(std::span<double> row) {
  const double mx = *std::max_element(row.begin(), row.end());
  double sum = 0.0;
  for (auto& v : row) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : row) v /= sum;
}

void check_labels(std::size_t rows, std::size_t K, std::span<const int> labels) {
  if (labels.size() != rows) throw Error(ErrorKind::ShapeMismatch, "label count differs from batch size");
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= K) throw Error(ErrorKind::ShapeMismatch, "label out of range");
  }
}

}  // namespace

ModelParams init_params(const CnnConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  ModelParams p;
  auto uniform_fill = [&](Tensor& t, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.values) v = dist(rng);
  };
  const auto shapes = layer_shapes(config);
  for (std::size_t b = 0; b < shapes.size(); ++b) {
    const auto& L = shapes[b];
    Tensor kernel = Tensor::zeros({static_cast<std::size_t>(L.cout), static_cast<std::size_t>(L.cin), 3, 3});
    uniform_fill(kernel, std::sqrt(6.0 / (L.cin * 9.0)));
    p.tensors.push_back({block_name(b, "kernel"), std::move(kernel)});
    p.tensors.push_back({block_name(b, "bias"), Tensor::zeros({static_cast<std::size_t>(L.cout)})});
  }
  const auto D = static_cast<std::size_t>(shapes.back().cout);
  const auto K = static_cast<std::size_t>(config.n_classes);
  Tensor dense = Tensor::zeros({K, D});
  uniform_fill(dense, 1.0 / std::sqrt(static_cast<double>(D)));
  p.tensors.push_back({"dense.weight", std::move(dense)});
  p.tensors.push_back({"dense.bias", Tensor::zeros({K})});
  return p;
}

Matrix forward_logits(const CnnConfig& config, const ModelParams& params, const InputBatch& batch) {
  config.validate();
  const auto shapes = layer_shapes(config);
  Matrix logits(batch.size(), static_cast<std::size_t>(config.n_classes));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto t = run_sample(config, shapes, params, batch[i]);
    std::copy(t.logits.begin(), t.logits.end(), logits.row(i).begin());
  }
  return logits;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix probs = logits;
  for (std::size_t i = 0; i < probs.rows(); ++i) softmax_in_place(probs.row(i));
  return probs;
}

Matrix forward(const CnnConfig& config, const ModelParams& params, const InputBatch& batch) {
  return softmax_rows(forward_logits(config, params, batch));
}

double cross_entropy(const Matrix& probs, std::span<const int> labels) {
  check_labels(probs.rows(), probs.cols(), labels);
  if (probs.rows() == 0) return 0.0;
  double loss = 0.0;
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    loss -= std::log(std::max(probs(i, static_cast<std::size_t>(labels[i])), 1e-12));
  }
  return loss / static_cast<double>(probs.rows());
}

LossGradient backward(const CnnConfig& config, const ModelParams& params, const InputBatch& batch,
                      std::span<const int> labels) {
  config.validate();
  const auto K = static_cast<std::size_t>(config.n_classes);
  check_labels(batch.size(), K, labels);
  if (batch.empty()) throw Error(ErrorKind::ShapeMismatch, "empty batch");
  const auto shapes = layer_shapes(config);

  LossGradient out;
  out.grads = params;
  for (auto& t : out.grads.tensors) std::fill(t.tensor.values.begin(), t.tensor.values.end(), 0.0);
  out.probs = Matrix(batch.size(), K);

  auto& dW = out.grads.at("dense.weight").values;
  auto& dbias = out.grads.at("dense.bias").values;
  const auto& W = params.at("dense.weight").values;
  const double inv_n = 1.0 / static_cast<double>(batch.size());

  for (std::size_t s = 0; s < batch.size(); ++s) {
    const auto t = run_sample(config, shapes, params, batch[s]);
    auto p = out.probs.row(s);
    std::copy(t.logits.begin(), t.logits.end(), p.begin());
    softmax_in_place(p);
    out.loss -= std::log(std::max(p[static_cast<std::size_t>(labels[s])], 1e-12)) * inv_n;

    // Softmax + cross-entropy: dL/dlogit = p - onehot.
    std::vector<double> dlogits(p.begin(), p.end());
    dlogits[static_cast<std::size_t>(labels[s])] -= 1.0;
    for (auto& g : dlogits) g *= inv_n;

    const std::size_t D = t.pooled.size();
    std::vector<double> dpooled(D, 0.0);
    for (std::size_t k = 0; k < K; ++k) {
      dbias[k] += dlogits[k];
      for (std::size_t d = 0; d < D; ++d) {
        dW[k * D + d] += dlogits[k] * t.pooled[d];
        dpooled[d] += W[k * D + d] * dlogits[k];
      }
    }

    const auto& last = shapes.back();
    const int plane = last.ho * last.wo;
    std::vector<double> dy(static_cast<std::size_t>(last.cout * plane));
    for (int c = 0; c < last.cout; ++c) {
      std::fill(dy.begin() + c * plane, dy.begin() + (c + 1) * plane, dpooled[static_cast<std::size_t>(c)] / plane);
    }

    for (std::size_t bi = shapes.size(); bi-- > 0;) {
      const auto& L = shapes[bi];
      const auto& z = t.pre[bi];
      std::vector<double> dz(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) dz[i] = z[i] > 0.0 ? dy[i] : 0.0;
      const bool need_dx = bi > 0;
      std::vector<double> dx;
      if (need_dx) dx.assign(static_cast<std::size_t>(L.cin * L.h * L.w), 0.0);
      conv_backward(L, t.block_in[bi].data(), params.at(block_name(bi, "kernel")).values.data(), dz.data(),
                    out.grads.at(block_name(bi, "kernel")).values.data(),
                    out.grads.at(block_name(bi, "bias")).values.data(), need_dx ? dx.data() : nullptr);
      if (L.residual && need_dx) {
        for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
      }
      dy = std::move(dx);
    }
  }

  for (const auto& t : out.grads.tensors) {
    if (!all_finite(t.tensor.values)) {
      throw Error(ErrorKind::NonFiniteGradient, "non-finite gradient in '" + t.name + "'");
    }
  }
  return out;
}

double lr_at(int epoch, double lr0, double decay) { return lr0 * std::pow(decay, epoch); }

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, double lr, const AdamConfig& adam) {
  if (grads.tensors.size() != params.tensors.size()) {
    throw Error(ErrorKind::ShapeMismatch, "gradient set does not match parameters");
  }
  if (state.m.empty()) {
    for (const auto& t : params.tensors) {
      state.m.emplace_back(t.tensor.size(), 0.0);
      state.v.emplace_back(t.tensor.size(), 0.0);
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(adam.beta1, t);
  const double correct2 = 1.0 - std::pow(adam.beta2, t);
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    auto& theta = params.tensors[i].tensor.values;
    const auto& g = grads.tensors[i].tensor.values;
    if (g.size() != theta.size()) throw Error(ErrorKind::ShapeMismatch, "gradient shape mismatch");
    auto& m = state.m[i];
    auto& v = state.v[i];
    for (std::size_t j = 0; j < theta.size(); ++j) {
      m[j] = adam.beta1 * m[j] + (1.0 - adam.beta1) * g[j];
      v[j] = adam.beta2 * v[j] + (1.0 - adam.beta2) * g[j] * g[j];
      const double m_hat = m[j] / correct1;
      const double v_hat = v[j] / correct2;
      theta[j] -= lr * m_hat / (std::sqrt(v_hat) + adam.epsilon);
    }
  }
}

}  // namespace affekt

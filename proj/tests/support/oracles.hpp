#pragma once

// Plain-loop reference implementations, independent of the tape and ops code.

#include <cmath>
#include <vector>

#include "deepair/model/deepair_model.hpp"

namespace deepair::testing {

using Vec = std::vector<double>;

inline double ref_sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// [B,Ci,H,W] x [Co,Ci,k,k] -> [B,Co,H,W], zero padding (k-1)/2.
inline Vec ref_conv(const Vec& in, std::size_t B, std::size_t ci, std::size_t h, std::size_t w, const Vec& kernel,
                    std::size_t co, std::size_t k, const Vec* bias) {
  Vec out(B * co * h * w, 0.0);
  const long pad = static_cast<long>(k - 1) / 2;
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < co; ++o) {
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          double s = bias ? (*bias)[o] : 0.0;
          for (std::size_t c = 0; c < ci; ++c) {
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) {
                const long sy = static_cast<long>(y + ky) - pad, sx = static_cast<long>(x + kx) - pad;
                if (sy < 0 || sx < 0 || sy >= static_cast<long>(h) || sx >= static_cast<long>(w)) continue;
                s += kernel[((o * ci + c) * k + ky) * k + kx] * in[((b * ci + c) * h + sy) * w + sx];
              }
            }
          }
          out[((b * co + o) * h + y) * w + x] = s;
        }
      }
    }
  }
  return out;
}

// Training-mode batch norm over B*H*W per channel, biased variance.
inline Vec ref_batch_norm(const Vec& in, std::size_t B, std::size_t C, std::size_t hw, const Vec& gamma,
                          const Vec& beta) {
  Vec out(in.size());
  for (std::size_t c = 0; c < C; ++c) {
    double m = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t p = 0; p < hw; ++p) m += in[(b * C + c) * hw + p];
    }
    m /= static_cast<double>(B * hw);
    double v = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t p = 0; p < hw; ++p) v += (in[(b * C + c) * hw + p] - m) * (in[(b * C + c) * hw + p] - m);
    }
    v /= static_cast<double>(B * hw);
    const double inv = 1.0 / std::sqrt(v + 1e-5);
    for (std::size_t b = 0; b < B; ++b) {
      for (std::size_t p = 0; p < hw; ++p) {
        const std::size_t i = (b * C + c) * hw + p;
        out[i] = gamma[c] * (in[i] - m) * inv + beta[c];
      }
    }
  }
  return out;
}

inline Vec ref_relu(Vec v) {
  for (double& x : v) x = x > 0 ? x : 0.0;
  return v;
}

struct RefLstm {
  Vec w_i, w_f, w_o, w_c, u_i, u_f, u_o, u_c, b_i, b_f, b_o, b_c;
  std::size_t in = 0, hidden = 0;
};

// One sample, one step; updates h and c in place.
inline void ref_lstm_step(const RefLstm& w, const Vec& x, Vec& h, Vec& c) {
  Vec h_new(w.hidden), c_new(w.hidden);
  auto pre = [&](const Vec& W, const Vec& U, const Vec& b, std::size_t j) {
    double s = b[j];
    for (std::size_t k = 0; k < w.in; ++k) s += W[j * w.in + k] * x[k];
    for (std::size_t k = 0; k < w.hidden; ++k) s += U[j * w.hidden + k] * h[k];
    return s;
  };
  for (std::size_t j = 0; j < w.hidden; ++j) {
    const double i = ref_sigmoid(pre(w.w_i, w.u_i, w.b_i, j));
    const double f = ref_sigmoid(pre(w.w_f, w.u_f, w.b_f, j));
    const double o = ref_sigmoid(pre(w.w_o, w.u_o, w.b_o, j));
    const double g = std::tanh(pre(w.w_c, w.u_c, w.b_c, j));
    c_new[j] = f * c[j] + i * g;
    h_new[j] = std::tanh(c_new[j]) * o;
  }
  h = h_new;
  c = c_new;
}

inline Vec param(const model::DeepAirModel& m, const std::string& name) {
  const auto d = m.parameters().get(name)->value().data();
  return Vec(d.begin(), d.end());
}

inline RefLstm ref_lstm_layer(const model::DeepAirModel& m, std::size_t layer) {
  const std::string p = "lstm.layer" + std::to_string(layer) + ".";
  RefLstm w{param(m, p + "w_i"), param(m, p + "w_f"), param(m, p + "w_o"), param(m, p + "w_c"),
            param(m, p + "u_i"), param(m, p + "u_f"), param(m, p + "u_o"), param(m, p + "u_c"),
            param(m, p + "b_i"), param(m, p + "b_f"), param(m, p + "b_o"), param(m, p + "b_c")};
  w.hidden = m.config().lstm.hidden_size;
  w.in = w.w_i.size() / w.hidden;
  return w;
}

// Residual unit on [B,F,N,N], train-mode statistics.
inline Vec ref_residual_unit(const model::DeepAirModel& m, std::size_t unit, const Vec& x, std::size_t B) {
  const auto& ar = m.config().airres;
  const std::size_t F = ar.feature_width;
  const std::size_t n2 = x.size() / (B * F);
  const std::size_t n = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(n2))));
  Vec branch = x;
  for (std::size_t c = 0; c < ar.convs_per_unit; ++c) {
    const std::string p = "airres.unit" + std::to_string(unit);
    branch = ref_conv(branch, B, F, n, n, param(m, p + ".conv" + std::to_string(c) + ".weight"), F, ar.kernel, nullptr);
    branch = ref_batch_norm(branch, B, F, n2, param(m, p + ".bn" + std::to_string(c) + ".gamma"),
                            param(m, p + ".bn" + std::to_string(c) + ".beta"));
    if (c + 1 < ar.convs_per_unit) branch = ref_relu(branch);
  }
  for (std::size_t i = 0; i < branch.size(); ++i) branch[i] += x[i];
  return ref_relu(branch);
}

// AirRes trunk on frames [B,C,N,N] -> [B,F], train-mode statistics.
inline Vec ref_airres(const model::DeepAirModel& m, const Vec& frames, std::size_t B, std::size_t n) {
  const auto& cfg = m.config();
  const std::size_t F = cfg.airres.feature_width, C = cfg.input_channels, n2 = n * n;
  const Vec stem_b = param(m, "airres.stem.bias");
  Vec x = ref_conv(frames, B, C, n, n, param(m, "airres.stem.weight"), F, 1, &stem_b);
  for (std::size_t u = 0; u < cfg.airres.num_units; ++u) {
    x = ref_residual_unit(m, u, x, B);
    if (cfg.airres.use_1x1 && u + 1 < cfg.airres.num_units) {
      const std::string p = "airres.mix" + std::to_string(u);
      const Vec bias = param(m, p + ".bias");
      x = ref_relu(ref_conv(x, B, F, n, n, param(m, p + ".weight"), F, 1, &bias));
    }
  }
  Vec pooled(B * F, 0.0);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t f = 0; f < F; ++f) {
      double s = 0.0;
      for (std::size_t p = 0; p < n2; ++p) s += x[(b * F + f) * n2 + p];
      pooled[b * F + f] = s / static_cast<double>(n2);
    }
  }
  return pooled;
}

// Full forward for patches [B,W,C,N,N] -> [B,outputs].
inline Vec ref_forward(const model::DeepAirModel& m, const Vec& patches, std::size_t B) {
  const auto& cfg = m.config();
  const std::size_t W = cfg.window, C = cfg.input_channels, n = cfg.patch_size, n2 = n * n;
  const std::size_t D = cfg.lstm_input_size();
  Vec features(B * W * D);
  if (cfg.kind == model::ModelKind::deepair) {
    features = ref_airres(m, patches, B * W, n);
  } else {
    for (std::size_t f = 0; f < B * W; ++f) {
      for (std::size_t c = 0; c < C; ++c) features[f * C + c] = patches[(f * C + c) * n2 + (n / 2) * n + n / 2];
    }
  }
  std::vector<RefLstm> layers;
  for (std::size_t l = 0; l < cfg.lstm.num_layers; ++l) layers.push_back(ref_lstm_layer(m, l));
  const std::size_t H = cfg.lstm.hidden_size;
  const Vec hw = param(m, "head.weight"), hb = param(m, "head.bias");
  Vec out(B * cfg.outputs);
  for (std::size_t b = 0; b < B; ++b) {
    std::vector<Vec> h(layers.size(), Vec(H, 0.0)), c(layers.size(), Vec(H, 0.0));
    for (std::size_t t = 0; t < W; ++t) {
      Vec x(features.begin() + static_cast<long>((b * W + t) * D), features.begin() + static_cast<long>((b * W + t + 1) * D));
      for (std::size_t l = 0; l < layers.size(); ++l) {
        ref_lstm_step(layers[l], x, h[l], c[l]);
        x = h[l];
      }
    }
    for (std::size_t o = 0; o < cfg.outputs; ++o) {
      double s = hb[o];
      for (std::size_t k = 0; k < H; ++k) s += hw[o * H + k] * h.back()[k];
      out[b * cfg.outputs + o] = s;
    }
  }
  return out;
}

}  // namespace deepair::testing

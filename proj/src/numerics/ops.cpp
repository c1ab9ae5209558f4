#include "deepair/numerics/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace deepair::ops {
namespace {

bool any_requires_grad(std::initializer_list<const Var*> inputs) {
  for (const Var* v : inputs) {
    if (v && *v && (*v)->requires_grad()) return true;
  }
  return false;
}

Var make_output(Tensor value, std::initializer_list<const Var*> inputs) {
  return make_var(std::move(value), any_requires_grad(inputs));
}

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a->shape() != b->shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a->shape()) + " vs " +
                                shape_string(b->shape()));
  }
}

// Views a rank-3 [C,H,W] or rank-4 [B,C,H,W] shape as (B,C,H,W).
struct Image4 {
  std::size_t batch, channels, height, width;
};

Image4 as_image(const char* op, const Shape& s) {
  if (s.size() == 3) return {1, s[0], s[1], s[2]};
  if (s.size() == 4) return {s[0], s[1], s[2], s[3]};
  throw std::invalid_argument(std::string(op) + ": expected [C,H,W] or [B,C,H,W], got " + shape_string(s));
}

template <typename Fwd, typename Deriv>
Var unary(Tape& tape, const Var& a, Fwd fwd, Deriv deriv_from_output) {
  Tensor out(a->shape());
  const auto in = a->value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = fwd(in[i]);
  Var result = make_output(std::move(out), {&a});
  tape.record(result, [a, result, deriv_from_output]() {
    if (!a->requires_grad()) return;
    const auto g = result->grad();
    const auto y = result->value().data();
    const auto x = a->value().data();
    auto ga = a->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * deriv_from_output(x[i], y[i]);
  });
  return result;
}

// Builds the im2col matrix [C_in*k*k, H*W] for one image.
void im2col(const double* image, std::size_t channels, std::size_t height, std::size_t width, std::size_t k,
            std::size_t pad, double* col) {
  const std::size_t hw = height * width;
  std::size_t row = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    const double* plane = image + c * hw;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx, ++row) {
        double* dst = col + row * hw;
        const long dy = static_cast<long>(ky) - static_cast<long>(pad);
        const long dx = static_cast<long>(kx) - static_cast<long>(pad);
        for (std::size_t y = 0; y < height; ++y) {
          const long sy = static_cast<long>(y) + dy;
          double* out_row = dst + y * width;
          if (sy < 0 || sy >= static_cast<long>(height)) {
            std::fill(out_row, out_row + width, 0.0);
            continue;
          }
          const double* src_row = plane + static_cast<std::size_t>(sy) * width;
          for (std::size_t x = 0; x < width; ++x) {
            const long sx = static_cast<long>(x) + dx;
            out_row[x] = (sx < 0 || sx >= static_cast<long>(width)) ? 0.0 : src_row[sx];
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, std::size_t channels, std::size_t height, std::size_t width, std::size_t k,
                std::size_t pad, double* image_grad) {
  const std::size_t hw = height * width;
  std::size_t row = 0;
  for (std::size_t c = 0; c < channels; ++c) {
    double* plane = image_grad + c * hw;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx, ++row) {
        const double* src = col + row * hw;
        const long dy = static_cast<long>(ky) - static_cast<long>(pad);
        const long dx = static_cast<long>(kx) - static_cast<long>(pad);
        for (std::size_t y = 0; y < height; ++y) {
          const long sy = static_cast<long>(y) + dy;
          if (sy < 0 || sy >= static_cast<long>(height)) continue;
          double* dst_row = plane + static_cast<std::size_t>(sy) * width;
          const double* src_row = src + y * width;
          for (std::size_t x = 0; x < width; ++x) {
            const long sx = static_cast<long>(x) + dx;
            if (sx >= 0 && sx < static_cast<long>(width)) dst_row[sx] += src_row[x];
          }
        }
      }
    }
  }
}

}  // namespace

Var add(Tape& tape, const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  Tensor out = a->value();
  const auto bv = b->value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] += bv[i];
  Var result = make_output(std::move(out), {&a, &b});
  tape.record(result, [a, b, result]() {
    const auto g = result->grad();
    for (const Var* v : {&a, &b}) {
      if (!(*v)->requires_grad()) continue;
      auto gv = (*v)->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
    }
  });
  return result;
}

Var sub(Tape& tape, const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  Tensor out = a->value();
  const auto bv = b->value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] -= bv[i];
  Var result = make_output(std::move(out), {&a, &b});
  tape.record(result, [a, b, result]() {
    const auto g = result->grad();
    if (a->requires_grad()) {
      auto ga = a->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (b->requires_grad()) {
      auto gb = b->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
  return result;
}

Var mul(Tape& tape, const Var& a, const Var& b) {
  require_same_shape("mul", a, b);
  Tensor out = a->value();
  const auto bv = b->value().data();
  auto o = out.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] *= bv[i];
  Var result = make_output(std::move(out), {&a, &b});
  tape.record(result, [a, b, result]() {
    const auto g = result->grad();
    const auto av = a->value().data();
    const auto bv = b->value().data();
    if (a->requires_grad()) {
      auto ga = a->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (b->requires_grad()) {
      auto gb = b->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
  return result;
}

Var scale(Tape& tape, const Var& a, double factor) {
  Tensor out = a->value();
  for (double& v : out.data()) v *= factor;
  Var result = make_output(std::move(out), {&a});
  tape.record(result, [a, result, factor]() {
    if (!a->requires_grad()) return;
    const auto g = result->grad();
    auto ga = a->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
  return result;
}

Var sum(Tape& tape, const Var& a) {
  double total = 0.0;
  for (double v : a->value().data()) total += v;
  Var result = make_output(Tensor::scalar(total), {&a});
  tape.record(result, [a, result]() {
    if (!a->requires_grad()) return;
    const double g = result->grad()[0];
    for (double& v : a->grad_buffer()) v += g;
  });
  return result;
}

Var mean(Tape& tape, const Var& a) {
  return scale(tape, sum(tape, a), 1.0 / static_cast<double>(a->numel()));
}

Var reshape(Tape& tape, const Var& a, Shape shape) {
  Var result = make_output(a->value().reshaped(std::move(shape)), {&a});
  tape.record(result, [a, result]() {
    if (!a->requires_grad()) return;
    const auto g = result->grad();
    auto ga = a->grad_buffer();
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
  return result;
}

Var relu(Tape& tape, const Var& a) {
  return unary(
      tape, a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var sigmoid(Tape& tape, const Var& a) {
  return unary(
      tape, a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Tape& tape, const Var& a) {
  return unary(
      tape, a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Var conv2d(Tape& tape, const Var& input, const Var& kernel, const Var& bias, std::size_t padding) {
  const Image4 img = as_image("conv2d", input->shape());
  const Shape& ks = kernel->shape();
  if (ks.size() != 4 || ks[2] != ks[3]) {
    throw std::invalid_argument("conv2d: kernel must be [C_out,C_in,k,k], got " + shape_string(ks));
  }
  const std::size_t c_out = ks[0];
  const std::size_t k = ks[2];
  if (ks[1] != img.channels) {
    throw std::invalid_argument("conv2d: kernel " + shape_string(ks) + " expects " + std::to_string(ks[1]) +
                                " input channels but input is " + shape_string(input->shape()));
  }
  if (k != 1 && k != 3) throw std::invalid_argument("conv2d: kernel size must be 1 or 3");
  if (padding != (k - 1) / 2) throw std::invalid_argument("conv2d: padding must be (k-1)/2");
  if (bias && bias->shape() != Shape{c_out}) {
    throw std::invalid_argument("conv2d: bias must be [" + std::to_string(c_out) + "]");
  }

  const std::size_t hw = img.height * img.width;
  const std::size_t col_rows = img.channels * k * k;
  Shape out_shape = input->shape().size() == 3 ? Shape{c_out, img.height, img.width}
                                               : Shape{img.batch, c_out, img.height, img.width};
  Tensor out(out_shape);
  const double* x = input->value().data().data();
  const double* w = kernel->value().data().data();
  const double* bv = bias ? bias->value().data().data() : nullptr;
  double* y = out.data().data();
  std::vector<double> col(k == 1 ? 0 : col_rows * hw);

  for (std::size_t b = 0; b < img.batch; ++b) {
    const double* image = x + b * img.channels * hw;
    const double* cols = image;
    if (k != 1) {
      im2col(image, img.channels, img.height, img.width, k, padding, col.data());
      cols = col.data();
    }
    double* out_img = y + b * c_out * hw;
    for (std::size_t co = 0; co < c_out; ++co) {
      double* out_row = out_img + co * hw;
      std::fill(out_row, out_row + hw, bv ? bv[co] : 0.0);
      const double* w_row = w + co * col_rows;
      for (std::size_t r = 0; r < col_rows; ++r) {
        const double wv = w_row[r];
        const double* src = cols + r * hw;
        for (std::size_t p = 0; p < hw; ++p) out_row[p] += wv * src[p];
      }
    }
  }

  Var result = make_output(std::move(out), {&input, &kernel, &bias});
  tape.record(result, [input, kernel, bias, result, img, c_out, k, padding, hw, col_rows]() {
    const double* g = result->grad().data();
    const double* x = input->value().data().data();
    const double* w = kernel->value().data().data();
    double* gx = input->requires_grad() ? input->grad_buffer().data() : nullptr;
    double* gw = kernel->requires_grad() ? kernel->grad_buffer().data() : nullptr;
    double* gb = bias && bias->requires_grad() ? bias->grad_buffer().data() : nullptr;
    std::vector<double> col(k == 1 ? 0 : col_rows * hw);
    std::vector<double> gcol(gx ? col_rows * hw : 0);

    for (std::size_t b = 0; b < img.batch; ++b) {
      const double* g_img = g + b * c_out * hw;
      if (gb) {
        for (std::size_t co = 0; co < c_out; ++co) {
          double s = 0.0;
          for (std::size_t p = 0; p < hw; ++p) s += g_img[co * hw + p];
          gb[co] += s;
        }
      }
      const double* image = x + b * img.channels * hw;
      if (gw) {
        const double* cols = image;
        if (k != 1) {
          im2col(image, img.channels, img.height, img.width, k, padding, col.data());
          cols = col.data();
        }
        for (std::size_t co = 0; co < c_out; ++co) {
          const double* g_row = g_img + co * hw;
          double* gw_row = gw + co * col_rows;
          for (std::size_t r = 0; r < col_rows; ++r) {
            const double* src = cols + r * hw;
            double s = 0.0;
            for (std::size_t p = 0; p < hw; ++p) s += g_row[p] * src[p];
            gw_row[r] += s;
          }
        }
      }
      if (gx) {
        std::fill(gcol.begin(), gcol.end(), 0.0);
        for (std::size_t co = 0; co < c_out; ++co) {
          const double* g_row = g_img + co * hw;
          const double* w_row = w + co * col_rows;
          for (std::size_t r = 0; r < col_rows; ++r) {
            const double wv = w_row[r];
            double* dst = gcol.data() + r * hw;
            for (std::size_t p = 0; p < hw; ++p) dst[p] += wv * g_row[p];
          }
        }
        double* gx_img = gx + b * img.channels * hw;
        if (k == 1) {
          for (std::size_t i = 0; i < col_rows * hw; ++i) gx_img[i] += gcol[i];
        } else {
          col2im_add(gcol.data(), img.channels, img.height, img.width, k, padding, gx_img);
        }
      }
    }
  });
  return result;
}

Var conv1x1(Tape& tape, const Var& input, const Var& weight, const Var& bias) {
  const Shape& ws = weight->shape();
  if (ws.size() != 2) throw std::invalid_argument("conv1x1: weight must be [C_out,C_in], got " + shape_string(ws));
  const Image4 img = as_image("conv1x1", input->shape());
  if (ws[1] != img.channels) {
    throw std::invalid_argument("conv1x1: weight " + shape_string(ws) + " does not match input " +
                                shape_string(input->shape()));
  }
  Var kernel = reshape(tape, weight, Shape{ws[0], ws[1], 1, 1});
  return conv2d(tape, input, kernel, bias, 0);
}

Var batch_norm(Tape& tape, const Var& input, const Var& gamma, const Var& beta, BatchNormState& state, Mode mode) {
  const Image4 img = as_image("batch_norm", input->shape());
  const std::size_t channels = img.channels;
  if (gamma->shape() != Shape{channels} || beta->shape() != Shape{channels} ||
      state.running_mean.shape() != Shape{channels}) {
    throw std::invalid_argument("batch_norm: parameter shape does not match " + shape_string(input->shape()));
  }
  if (mode == Mode::eval && !state.initialized) {
    throw std::logic_error("batch_norm: eval mode requested before running statistics were initialized");
  }
  const std::size_t hw = img.height * img.width;
  const double count = static_cast<double>(img.batch * hw);
  const double* x = input->value().data().data();
  const double* gm = gamma->value().data().data();
  const double* bt = beta->value().data().data();

  std::vector<double> mean(channels), inv_std(channels);
  if (mode == Mode::train) {
    for (std::size_t c = 0; c < channels; ++c) {
      double s = 0.0;
      for (std::size_t b = 0; b < img.batch; ++b) {
        const double* p = x + (b * channels + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) s += p[i];
      }
      const double mu = s / count;
      double ss = 0.0;
      for (std::size_t b = 0; b < img.batch; ++b) {
        const double* p = x + (b * channels + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) ss += (p[i] - mu) * (p[i] - mu);
      }
      const double var = ss / count;
      mean[c] = mu;
      inv_std[c] = 1.0 / std::sqrt(var + BatchNormState::kEpsilon);
      const double unbiased = count > 1.0 ? ss / (count - 1.0) : var;
      const double m = BatchNormState::kMomentum;
      state.running_mean[c] = (1.0 - m) * state.running_mean[c] + m * mu;
      state.running_var[c] = (1.0 - m) * state.running_var[c] + m * unbiased;
    }
    state.initialized = true;
  } else {
    for (std::size_t c = 0; c < channels; ++c) {
      mean[c] = state.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + BatchNormState::kEpsilon);
    }
  }

  Tensor xhat(input->shape());
  Tensor out(input->shape());
  double* xh = xhat.data().data();
  double* y = out.data().data();
  for (std::size_t b = 0; b < img.batch; ++b) {
    for (std::size_t c = 0; c < channels; ++c) {
      const std::size_t off = (b * channels + c) * hw;
      for (std::size_t i = 0; i < hw; ++i) {
        xh[off + i] = (x[off + i] - mean[c]) * inv_std[c];
        y[off + i] = gm[c] * xh[off + i] + bt[c];
      }
    }
  }

  Var result = make_output(std::move(out), {&input, &gamma, &beta});
  tape.record(result, [input, gamma, beta, result, img, hw, count, mode, inv_std, xhat = std::move(xhat)]() {
    const double* g = result->grad().data();
    const double* xh = xhat.data().data();
    const double* gm = gamma->value().data().data();
    const std::size_t channels = img.channels;
    std::vector<double> sum_g(channels, 0.0), sum_gx(channels, 0.0);
    for (std::size_t b = 0; b < img.batch; ++b) {
      for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t off = (b * channels + c) * hw;
        for (std::size_t i = 0; i < hw; ++i) {
          sum_g[c] += g[off + i];
          sum_gx[c] += g[off + i] * xh[off + i];
        }
      }
    }
    if (gamma->requires_grad()) {
      auto gg = gamma->grad_buffer();
      for (std::size_t c = 0; c < channels; ++c) gg[c] += sum_gx[c];
    }
    if (beta->requires_grad()) {
      auto gb = beta->grad_buffer();
      for (std::size_t c = 0; c < channels; ++c) gb[c] += sum_g[c];
    }
    if (!input->requires_grad()) return;
    double* gx = input->grad_buffer().data();
    for (std::size_t b = 0; b < img.batch; ++b) {
      for (std::size_t c = 0; c < channels; ++c) {
        const std::size_t off = (b * channels + c) * hw;
        const double factor = gm[c] * inv_std[c];
        if (mode == Mode::train) {
          const double mg = sum_g[c] / count;
          const double mgx = sum_gx[c] / count;
          for (std::size_t i = 0; i < hw; ++i) gx[off + i] += factor * (g[off + i] - mg - xh[off + i] * mgx);
        } else {
          for (std::size_t i = 0; i < hw; ++i) gx[off + i] += factor * g[off + i];
        }
      }
    }
  });
  return result;
}

Var global_avg_pool(Tape& tape, const Var& input) {
  const Image4 img = as_image("global_avg_pool", input->shape());
  const std::size_t hw = img.height * img.width;
  Shape out_shape = input->shape().size() == 3 ? Shape{img.channels} : Shape{img.batch, img.channels};
  Tensor out(out_shape);
  const double* x = input->value().data().data();
  for (std::size_t bc = 0; bc < img.batch * img.channels; ++bc) {
    double s = 0.0;
    for (std::size_t i = 0; i < hw; ++i) s += x[bc * hw + i];
    out[bc] = s / static_cast<double>(hw);
  }
  Var result = make_output(std::move(out), {&input});
  tape.record(result, [input, result, img, hw]() {
    if (!input->requires_grad()) return;
    const auto g = result->grad();
    double* gx = input->grad_buffer().data();
    const double inv = 1.0 / static_cast<double>(hw);
    for (std::size_t bc = 0; bc < img.batch * img.channels; ++bc) {
      const double v = g[bc] * inv;
      for (std::size_t i = 0; i < hw; ++i) gx[bc * hw + i] += v;
    }
  });
  return result;
}

Var center_pixel(Tape& tape, const Var& input) {
  const Image4 img = as_image("center_pixel", input->shape());
  const std::size_t hw = img.height * img.width;
  const std::size_t offset = (img.height / 2) * img.width + img.width / 2;
  Tensor out(Shape{img.batch, img.channels});
  const double* x = input->value().data().data();
  for (std::size_t bc = 0; bc < img.batch * img.channels; ++bc) out[bc] = x[bc * hw + offset];
  Var result = make_output(std::move(out), {&input});
  tape.record(result, [input, result, img, hw, offset]() {
    if (!input->requires_grad()) return;
    const auto g = result->grad();
    double* gx = input->grad_buffer().data();
    for (std::size_t bc = 0; bc < img.batch * img.channels; ++bc) gx[bc * hw + offset] += g[bc];
  });
  return result;
}

Var linear(Tape& tape, const Var& x, const Var& weight, const Var& bias) {
  const Shape& ws = weight->shape();
  const Shape& xs = x->shape();
  if (ws.size() != 2) throw std::invalid_argument("linear: weight must be [out,in], got " + shape_string(ws));
  if (xs.size() != 1 && xs.size() != 2) {
    throw std::invalid_argument("linear: input must be [in] or [B,in], got " + shape_string(xs));
  }
  const std::size_t n_out = ws[0];
  const std::size_t n_in = ws[1];
  const std::size_t rows = xs.size() == 1 ? 1 : xs[0];
  if (xs.back() != n_in) {
    throw std::invalid_argument("linear: weight " + shape_string(ws) + " does not match input " + shape_string(xs));
  }
  if (bias && bias->shape() != Shape{n_out}) {
    throw std::invalid_argument("linear: bias must be [" + std::to_string(n_out) + "], got " +
                                shape_string(bias->shape()));
  }
  Tensor out(xs.size() == 1 ? Shape{n_out} : Shape{rows, n_out});
  const double* xv = x->value().data().data();
  const double* w = weight->value().data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv + r * n_in;
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* wr = w + o * n_in;
      double s = bias ? bias->value()[o] : 0.0;
      for (std::size_t i = 0; i < n_in; ++i) s += wr[i] * xr[i];
      out[r * n_out + o] = s;
    }
  }
  Var result = make_output(std::move(out), {&x, &weight, &bias});
  tape.record(result, [x, weight, bias, result, rows, n_in, n_out]() {
    const double* g = result->grad().data();
    const double* xv = x->value().data().data();
    const double* w = weight->value().data().data();
    if (bias && bias->requires_grad()) {
      auto gb = bias->grad_buffer();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t o = 0; o < n_out; ++o) gb[o] += g[r * n_out + o];
      }
    }
    if (weight->requires_grad()) {
      double* gw = weight->grad_buffer().data();
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t o = 0; o < n_out; ++o) {
          const double gv = g[r * n_out + o];
          double* gwr = gw + o * n_in;
          const double* xr = xv + r * n_in;
          for (std::size_t i = 0; i < n_in; ++i) gwr[i] += gv * xr[i];
        }
      }
    }
    if (x->requires_grad()) {
      double* gx = x->grad_buffer().data();
      for (std::size_t r = 0; r < rows; ++r) {
        double* gxr = gx + r * n_in;
        for (std::size_t o = 0; o < n_out; ++o) {
          const double gv = g[r * n_out + o];
          const double* wr = w + o * n_in;
          for (std::size_t i = 0; i < n_in; ++i) gxr[i] += gv * wr[i];
        }
      }
    }
  });
  return result;
}

Var select_rows(Tape& tape, const Var& x, std::vector<std::size_t> rows) {
  const Shape& xs = x->shape();
  if (xs.size() != 2) throw std::invalid_argument("select_rows: expected [R,D], got " + shape_string(xs));
  const std::size_t width = xs[1];
  Tensor out(Shape{rows.size(), width});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= xs[0]) throw std::out_of_range("select_rows: row " + std::to_string(rows[i]) + " out of range");
    std::copy_n(x->value().data().data() + rows[i] * width, width, out.data().data() + i * width);
  }
  Var result = make_output(std::move(out), {&x});
  tape.record(result, [x, result, rows = std::move(rows), width]() {
    if (!x->requires_grad()) return;
    const double* g = result->grad().data();
    double* gx = x->grad_buffer().data();
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t j = 0; j < width; ++j) gx[rows[i] * width + j] += g[i * width + j];
    }
  });
  return result;
}

Var mse_loss(Tape& tape, const Var& prediction, const Tensor& target) {
  if (prediction->value().numel() != target.numel()) {
    throw std::invalid_argument("mse_loss: prediction " + shape_string(prediction->shape()) + " vs target " +
                                shape_string(target.shape()));
  }
  const auto p = prediction->value().data();
  const auto t = target.data();
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += (p[i] - t[i]) * (p[i] - t[i]);
  const double n = static_cast<double>(p.size());
  Var result = make_output(Tensor::scalar(s / n), {&prediction});
  tape.record(result, [prediction, result, target, n]() {
    if (!prediction->requires_grad()) return;
    const double g = result->grad()[0];
    const auto p = prediction->value().data();
    const auto t = target.data();
    auto gp = prediction->grad_buffer();
    for (std::size_t i = 0; i < p.size(); ++i) gp[i] += g * 2.0 * (p[i] - t[i]) / n;
  });
  return result;
}

LstmState lstm_step(Tape& tape, const Var& x, const Var& h_prev, const Var& c_prev, const LstmWeights& wt) {
  const std::size_t hidden = wt.w_i->shape().at(0);
  const Shape& hs = h_prev->shape();
  if (hs != c_prev->shape() || hs.back() != hidden || hs.size() != x->shape().size() ||
      (hs.size() == 2 && hs[0] != x->shape()[0])) {
    throw std::invalid_argument("lstm_step: state " + shape_string(hs) + "/" + shape_string(c_prev->shape()) +
                                " incompatible with input " + shape_string(x->shape()) + " and hidden size " +
                                std::to_string(hidden));
  }
  auto gate = [&](const Var& w, const Var& u, const Var& b) {
    return add(tape, linear(tape, x, w, b), linear(tape, h_prev, u, nullptr));
  };
  Var i = sigmoid(tape, gate(wt.w_i, wt.u_i, wt.b_i));
  Var f = sigmoid(tape, gate(wt.w_f, wt.u_f, wt.b_f));
  Var o = sigmoid(tape, gate(wt.w_o, wt.u_o, wt.b_o));
  Var candidate = tanh(tape, gate(wt.w_c, wt.u_c, wt.b_c));
  Var c = add(tape, mul(tape, f, c_prev), mul(tape, i, candidate));
  Var h = mul(tape, tanh(tape, c), o);
  return {h, c};
}

}  // namespace deepair::ops

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "fmbeam/autograd.hpp"
#include "fmbeam/errors.hpp"

namespace fmbeam {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMatrix>;
using MutMap = Eigen::Map<RowMatrix>;

ConstMap as_matrix(const Tensor& t) { return ConstMap(t.data().data(), t.rows(), t.cols()); }
MutMap as_matrix(Tensor& t) { return MutMap(t.data().data(), t.rows(), t.cols()); }

Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw Error("operation on an unbound Var");
  return *a.tape;
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(op) + " " + a.shape_string() + " vs " + b.shape_string());
  }
}

// Accumulates into the gradient of `v` only when it participates in autodiff.
template <class F>
void accumulate(Tape& t, Var v, F&& f) {
  if (t.requires_grad(v)) f(t.grad_buffer(v.id));
}

template <class F>
Var unary(const char* op, Var a, F&& fn, Tape::BackwardFn backward) {
  Tape& t = tape_of(a);
  const Tensor& x = t.value(a);
  Tensor out = Tensor::zeros(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = fn(x[i]);
  const std::array<Var, 1> in{a};
  return t.push(op, std::move(out), in, std::move(backward));
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  if (va.cols() != vb.rows()) {
    throw ShapeError("matmul " + va.shape_string() + " * " + vb.shape_string());
  }
  Tensor out = fmbeam::matmul(va, vb);
  const std::array<Var, 2> in{a, b};
  return t.push("matmul", std::move(out), in,
                [a, b](Tape& t, const Tensor&, const Tensor& g) {
                  accumulate(t, a, [&](Tensor& ga) {
                    as_matrix(ga).noalias() += as_matrix(g) * as_matrix(t.value(b)).transpose();
                  });
                  accumulate(t, b, [&](Tensor& gb) {
                    as_matrix(gb).noalias() += as_matrix(t.value(a)).transpose() * as_matrix(g);
                  });
                });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  require_same_shape("add", va, vb);
  Tensor out = Tensor::zeros(va.rows(), va.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
  const std::array<Var, 2> in{a, b};
  return t.push("add", std::move(out), in, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    accumulate(t, a, [&](Tensor& ga) { as_matrix(ga) += as_matrix(g); });
    accumulate(t, b, [&](Tensor& gb) { as_matrix(gb) += as_matrix(g); });
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  require_same_shape("sub", va, vb);
  Tensor out = Tensor::zeros(va.rows(), va.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
  const std::array<Var, 2> in{a, b};
  return t.push("sub", std::move(out), in, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    accumulate(t, a, [&](Tensor& ga) { as_matrix(ga) += as_matrix(g); });
    accumulate(t, b, [&](Tensor& gb) { as_matrix(gb) -= as_matrix(g); });
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a);
  const Tensor& va = t.value(a);
  const Tensor& vb = t.value(b);
  require_same_shape("mul", va, vb);
  Tensor out = Tensor::zeros(va.rows(), va.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
  const std::array<Var, 2> in{a, b};
  return t.push("mul", std::move(out), in, [a, b](Tape& t, const Tensor&, const Tensor& g) {
    accumulate(t, a, [&](Tensor& ga) {
      const Tensor& vb = t.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * vb[i];
    });
    accumulate(t, b, [&](Tensor& gb) {
      const Tensor& va = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * va[i];
    });
  });
}

Var add_row(Var a, Var row) {
  Tape& t = tape_of(a);
  const Tensor& va = t.value(a);
  const Tensor& vr = t.value(row);
  if (vr.rows() != 1 || vr.cols() != va.cols()) {
    throw ShapeError("add_row " + va.shape_string() + " + " + vr.shape_string());
  }
  Tensor out = Tensor::zeros(va.rows(), va.cols());
  for (std::size_t r = 0; r < va.rows(); ++r) {
    for (std::size_t c = 0; c < va.cols(); ++c) out(r, c) = va(r, c) + vr[c];
  }
  const std::array<Var, 2> in{a, row};
  return t.push("add_row", std::move(out), in,
                [a, row](Tape& t, const Tensor&, const Tensor& g) {
                  accumulate(t, a, [&](Tensor& ga) { as_matrix(ga) += as_matrix(g); });
                  accumulate(t, row, [&](Tensor& gr) {
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      for (std::size_t c = 0; c < g.cols(); ++c) gr[c] += g(r, c);
                    }
                  });
                });
}

Var scale(Var a, double s) {
  return unary("scale", a, [s](double x) { return s * x; },
               [a, s](Tape& t, const Tensor&, const Tensor& g) {
                 accumulate(t, a, [&](Tensor& ga) { as_matrix(ga) += s * as_matrix(g); });
               });
}

Var relu(Var a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
               [a](Tape& t, const Tensor& y, const Tensor& g) {
                 accumulate(t, a, [&](Tensor& ga) {
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     if (y[i] > 0.0) ga[i] += g[i];
                   }
                 });
               });
}

Var tanh(Var a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); },
               [a](Tape& t, const Tensor& y, const Tensor& g) {
                 accumulate(t, a, [&](Tensor& ga) {
                   for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
                 });
               });
}

Var sigmoid(Var a) {
  return unary("sigmoid", a,
               [](double x) {
                 if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
                 const double e = std::exp(x);
                 return e / (1.0 + e);
               },
               [a](Tape& t, const Tensor& y, const Tensor& g) {
                 accumulate(t, a, [&](Tensor& ga) {
                   for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
                 });
               });
}

Var softmax_rows(Var a) {
  Tape& t = tape_of(a);
  Tensor out = fmbeam::softmax_rows(t.value(a));
  const std::array<Var, 1> in{a};
  return t.push("softmax_rows", std::move(out), in,
                [a](Tape& t, const Tensor& y, const Tensor& g) {
                  accumulate(t, a, [&](Tensor& ga) {
                    for (std::size_t r = 0; r < y.rows(); ++r) {
                      double dot = 0.0;
                      for (std::size_t c = 0; c < y.cols(); ++c) dot += g(r, c) * y(r, c);
                      for (std::size_t c = 0; c < y.cols(); ++c) {
                        ga(r, c) += y(r, c) * (g(r, c) - dot);
                      }
                    }
                  });
                });
}

Var log_clamped(Var a, double floor) {
  return unary("log_clamped", a, [floor](double x) { return std::log(std::max(x, floor)); },
               [a, floor](Tape& t, const Tensor&, const Tensor& g) {
                 accumulate(t, a, [&](Tensor& ga) {
                   const Tensor& x = t.value(a);
                   for (std::size_t i = 0; i < g.size(); ++i) {
                     if (x[i] > floor) ga[i] += g[i] / x[i];
                   }
                 });
               });
}

Var pick(Var a, std::span<const int> cols) {
  Tape& t = tape_of(a);
  const Tensor& x = t.value(a);
  if (cols.size() != x.rows()) {
    throw ShapeError("pick: " + std::to_string(cols.size()) + " indices for " + x.shape_string());
  }
  std::vector<int> idx(cols.begin(), cols.end());
  Tensor out = Tensor::zeros(x.rows(), 1);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    if (idx[r] < 0 || static_cast<std::size_t>(idx[r]) >= x.cols()) {
      throw ShapeError("pick: column " + std::to_string(idx[r]) + " out of range");
    }
    out[r] = x(r, static_cast<std::size_t>(idx[r]));
  }
  const std::array<Var, 1> in{a};
  return t.push("pick", std::move(out), in,
                [a, idx = std::move(idx)](Tape& t, const Tensor&, const Tensor& g) {
                  accumulate(t, a, [&](Tensor& ga) {
                    for (std::size_t r = 0; r < idx.size(); ++r) {
                      ga(r, static_cast<std::size_t>(idx[r])) += g[r];
                    }
                  });
                });
}

Var sum(Var a) {
  Tape& t = tape_of(a);
  double total = 0.0;
  for (double v : t.value(a).data()) total += v;
  const std::array<Var, 1> in{a};
  return t.push("sum", Tensor::scalar(total), in,
                [a](Tape& t, const Tensor&, const Tensor& g) {
                  accumulate(t, a, [&](Tensor& ga) {
                    for (double& v : ga.data()) v += g[0];
                  });
                });
}

Var mean(Var a) {
  const std::size_t n = tape_of(a).value(a).size();
  if (n == 0) throw ShapeError("mean of empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols with no inputs");
  Tape& t = tape_of(parts[0]);
  const std::size_t rows = t.value(parts[0]).rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (Var p : parts) {
    const Tensor& v = t.value(p);
    if (v.rows() != rows) throw ShapeError("concat_cols row mismatch " + v.shape_string());
    offsets.push_back(total);
    total += v.cols();
  }
  Tensor out = Tensor::zeros(rows, total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& v = t.value(parts[k]);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(v.row_span(r).begin(), v.row_span(r).end(), out.row_span(r).begin() + offsets[k]);
    }
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.push("concat_cols", std::move(out), parts,
                [inputs, offsets](Tape& t, const Tensor&, const Tensor& g) {
                  for (std::size_t k = 0; k < inputs.size(); ++k) {
                    accumulate(t, inputs[k], [&](Tensor& gk) {
                      for (std::size_t r = 0; r < gk.rows(); ++r) {
                        for (std::size_t c = 0; c < gk.cols(); ++c) gk(r, c) += g(r, offsets[k] + c);
                      }
                    });
                  }
                });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  Tape& t = tape_of(a);
  const Tensor& x = t.value(a);
  if (begin + count > x.cols()) {
    throw ShapeError("slice_cols [" + std::to_string(begin) + ", +" + std::to_string(count) +
                     ") of " + x.shape_string());
  }
  Tensor out = Tensor::zeros(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) out(r, c) = x(r, begin + c);
  }
  const std::array<Var, 1> in{a};
  return t.push("slice_cols", std::move(out), in,
                [a, begin](Tape& t, const Tensor&, const Tensor& g) {
                  accumulate(t, a, [&](Tensor& ga) {
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, begin + c) += g(r, c);
                    }
                  });
                });
}

Var select_rows(Var a, std::span<const std::size_t> rows) {
  Tape& t = tape_of(a);
  const Tensor& x = t.value(a);
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  Tensor out = Tensor::zeros(idx.size(), x.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= x.rows()) throw ShapeError("select_rows: row out of range for " + x.shape_string());
    std::copy(x.row_span(idx[r]).begin(), x.row_span(idx[r]).end(), out.row_span(r).begin());
  }
  const std::array<Var, 1> in{a};
  return t.push("select_rows", std::move(out), in,
                [a, idx = std::move(idx)](Tape& t, const Tensor&, const Tensor& g) {
                  accumulate(t, a, [&](Tensor& ga) {
                    for (std::size_t r = 0; r < idx.size(); ++r) {
                      for (std::size_t c = 0; c < g.cols(); ++c) ga(idx[r], c) += g(r, c);
                    }
                  });
                });
}

Var mean_pool(Var a, std::size_t group) {
  Tape& t = tape_of(a);
  const Tensor& x = t.value(a);
  if (group == 0 || x.rows() % group != 0) {
    throw ShapeError("mean_pool group " + std::to_string(group) + " on " + x.shape_string());
  }
  const std::size_t n = x.rows() / group;
  const double inv = 1.0 / static_cast<double>(group);
  Tensor out = Tensor::zeros(n, x.cols());
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t s = 0; s < group; ++s) {
      for (std::size_t c = 0; c < x.cols(); ++c) out(b, c) += x(b * group + s, c) * inv;
    }
  }
  const std::array<Var, 1> in{a};
  return t.push("mean_pool", std::move(out), in,
                [a, group, inv](Tape& t, const Tensor&, const Tensor& g) {
                  accumulate(t, a, [&](Tensor& ga) {
                    for (std::size_t r = 0; r < ga.rows(); ++r) {
                      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g(r / group, c) * inv;
                    }
                  });
                });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  Tape& t = tape_of(x);
  const Tensor& vx = t.value(x);
  const Tensor& vg = t.value(gamma);
  const Tensor& vb = t.value(beta);
  const std::size_t rows = vx.rows();
  const std::size_t d = vx.cols();
  if (vg.size() != d || vb.size() != d) {
    throw ShapeError("layer_norm " + vx.shape_string() + " with gamma " + vg.shape_string());
  }
  Tensor normed = Tensor::zeros(rows, d);
  std::vector<double> inv_std(rows);
  Tensor out = Tensor::zeros(rows, d);
  for (std::size_t r = 0; r < rows; ++r) {
    double mu = 0.0;
    for (std::size_t c = 0; c < d; ++c) mu += vx(r, c);
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t c = 0; c < d; ++c) var += (vx(r, c) - mu) * (vx(r, c) - mu);
    var /= static_cast<double>(d);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < d; ++c) {
      normed(r, c) = (vx(r, c) - mu) * inv_std[r];
      out(r, c) = normed(r, c) * vg[c] + vb[c];
    }
  }
  const std::array<Var, 3> in{x, gamma, beta};
  return t.push(
      "layer_norm", std::move(out), in,
      [x, gamma, beta, normed = std::move(normed), inv_std = std::move(inv_std)](
          Tape& t, const Tensor&, const Tensor& g) {
        const std::size_t d = g.cols();
        accumulate(t, gamma, [&](Tensor& gg) {
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < d; ++c) gg[c] += g(r, c) * normed(r, c);
          }
        });
        accumulate(t, beta, [&](Tensor& gb) {
          for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t c = 0; c < d; ++c) gb[c] += g(r, c);
          }
        });
        accumulate(t, x, [&](Tensor& gx) {
          const Tensor& vg = t.value(gamma);
          std::vector<double> dn(d);
          for (std::size_t r = 0; r < g.rows(); ++r) {
            double mean_dn = 0.0;
            double mean_dn_n = 0.0;
            for (std::size_t c = 0; c < d; ++c) {
              dn[c] = g(r, c) * vg[c];
              mean_dn += dn[c];
              mean_dn_n += dn[c] * normed(r, c);
            }
            mean_dn /= static_cast<double>(d);
            mean_dn_n /= static_cast<double>(d);
            for (std::size_t c = 0; c < d; ++c) {
              gx(r, c) += inv_std[r] * (dn[c] - mean_dn - normed(r, c) * mean_dn_n);
            }
          }
        });
      });
}

Var attention(Var q, Var k, Var v, std::size_t batch, std::size_t seq, std::size_t heads) {
  Tape& t = tape_of(q);
  const Tensor& vq = t.value(q);
  const Tensor& vk = t.value(k);
  const Tensor& vv = t.value(v);
  const std::size_t d = vq.cols();
  if (!vq.same_shape(vk) || !vq.same_shape(vv) || vq.rows() != batch * seq || heads == 0 ||
      d % heads != 0) {
    throw ShapeError("attention q" + vq.shape_string() + " k" + vk.shape_string() + " v" +
                     vv.shape_string() + " batch " + std::to_string(batch) + " seq " +
                     std::to_string(seq) + " heads " + std::to_string(heads));
  }
  const std::size_t dh = d / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

  // probs[(b*heads + h)*seq*seq + i*seq + j]
  std::vector<double> probs(batch * heads * seq * seq);
  Tensor out = Tensor::zeros(batch * seq, d);
  std::vector<double> row(seq);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      double* p = probs.data() + (b * heads + h) * seq * seq;
      const std::size_t c0 = h * dh;
      for (std::size_t i = 0; i < seq; ++i) {
        double peak = -INFINITY;
        for (std::size_t j = 0; j < seq; ++j) {
          double s = 0.0;
          for (std::size_t c = 0; c < dh; ++c) s += vq(b * seq + i, c0 + c) * vk(b * seq + j, c0 + c);
          row[j] = s * inv_sqrt;
          peak = std::max(peak, row[j]);
        }
        double total = 0.0;
        for (std::size_t j = 0; j < seq; ++j) {
          row[j] = std::exp(row[j] - peak);
          total += row[j];
        }
        for (std::size_t j = 0; j < seq; ++j) {
          p[i * seq + j] = row[j] / total;
          for (std::size_t c = 0; c < dh; ++c) {
            out(b * seq + i, c0 + c) += p[i * seq + j] * vv(b * seq + j, c0 + c);
          }
        }
      }
    }
  }

  const std::array<Var, 3> in{q, k, v};
  return t.push(
      "attention", std::move(out), in,
      [q, k, v, batch, seq, heads, dh, inv_sqrt, probs = std::move(probs)](
          Tape& t, const Tensor&, const Tensor& g) {
        const Tensor& vq = t.value(q);
        const Tensor& vk = t.value(k);
        const Tensor& vv = t.value(v);
        Tensor* gq = t.requires_grad(q) ? &t.grad_buffer(q.id) : nullptr;
        Tensor* gk = t.requires_grad(k) ? &t.grad_buffer(k.id) : nullptr;
        Tensor* gv = t.requires_grad(v) ? &t.grad_buffer(v.id) : nullptr;
        std::vector<double> dp(seq);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t h = 0; h < heads; ++h) {
            const double* p = probs.data() + (b * heads + h) * seq * seq;
            const std::size_t c0 = h * dh;
            for (std::size_t i = 0; i < seq; ++i) {
              const std::size_t ri = b * seq + i;
              // dP_ij = dO_i . V_j ; dS = P * (dP - sum_j P_ij dP_ij)
              double weighted = 0.0;
              for (std::size_t j = 0; j < seq; ++j) {
                double s = 0.0;
                for (std::size_t c = 0; c < dh; ++c) s += g(ri, c0 + c) * vv(b * seq + j, c0 + c);
                dp[j] = s;
                weighted += p[i * seq + j] * s;
              }
              for (std::size_t j = 0; j < seq; ++j) {
                const std::size_t rj = b * seq + j;
                const double pij = p[i * seq + j];
                const double ds = pij * (dp[j] - weighted) * inv_sqrt;
                for (std::size_t c = 0; c < dh; ++c) {
                  if (gv != nullptr) (*gv)(rj, c0 + c) += pij * g(ri, c0 + c);
                  if (gq != nullptr) (*gq)(ri, c0 + c) += ds * vk(rj, c0 + c);
                  if (gk != nullptr) (*gk)(rj, c0 + c) += ds * vq(ri, c0 + c);
                }
              }
            }
          }
        }
      });
}

}  // namespace fmbeam

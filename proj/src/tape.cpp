#include "colagnn/tape.hpp"

#include <cmath>
#include <string>

namespace colagnn {

namespace {

double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

double sign0(double x) {
    if (x > 0.0) return 1.0;
    if (x < 0.0) return -1.0;
    return 0.0;  // subgradient at the kink
}

}  // namespace

int Tape::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::check_var(Var v, const char* op) const {
    if (v.id < 0 || v.id >= static_cast<int>(nodes_.size())) {
        throw ShapeError(std::string(op) + ": invalid node handle");
    }
}

Var Tape::leaf(Tensor value) {
    Node n;
    n.kind = OpKind::Leaf;
    n.requires_grad = true;
    n.value = std::move(value);
    return Var{push(std::move(n))};
}

Var Tape::constant(Tensor value) {
    Node n;
    n.kind = OpKind::Leaf;
    n.requires_grad = false;
    n.value = std::move(value);
    return Var{push(std::move(n))};
}

Var Tape::matmul(Var a, Var b) {
    check_var(a, "matmul");
    check_var(b, "matmul");
    const Tensor& av = node(a).value;
    const Tensor& bv = node(b).value;
    if (av.cols() != bv.rows()) {
        throw ShapeError("matmul: inner dimensions disagree, " + shape_str(av) + " * " +
                         shape_str(bv));
    }
    const int m = av.rows(), k = av.cols(), p = bv.cols();
    Tensor out(m, p, 0.0);
    const double* A = av.data().data();
    const double* B = bv.data().data();
    double* C = out.data().data();
    for (int i = 0; i < m; ++i) {
        const double* Ai = A + static_cast<std::size_t>(i) * k;
        double* Ci = C + static_cast<std::size_t>(i) * p;
        for (int kk = 0; kk < k; ++kk) {
            const double aik = Ai[kk];
            if (aik == 0.0) continue;
            const double* Bk = B + static_cast<std::size_t>(kk) * p;
            for (int j = 0; j < p; ++j) Ci[j] += aik * Bk[j];
        }
    }
    Node n;
    n.kind = OpKind::MatMul;
    n.a = a.id;
    n.b = b.id;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    n.value = std::move(out);
    return Var{push(std::move(n))};
}

Var Tape::add(Var a, Var b) {
    check_var(a, "add");
    check_var(b, "add");
    const Tensor& av = node(a).value;
    const Tensor& bv = node(b).value;
    if (!av.same_shape(bv)) {
        throw ShapeError("add: shapes differ, " + shape_str(av) + " vs " + shape_str(bv));
    }
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += bv.data()[i];
    Node n;
    n.kind = OpKind::Add;
    n.a = a.id;
    n.b = b.id;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    n.value = std::move(out);
    return Var{push(std::move(n))};
}

Var Tape::hadamard(Var a, Var b) {
    check_var(a, "hadamard");
    check_var(b, "hadamard");
    const Tensor& av = node(a).value;
    const Tensor& bv = node(b).value;
    if (!av.same_shape(bv)) {
        throw ShapeError("hadamard: shapes differ, " + shape_str(av) + " vs " + shape_str(bv));
    }
    Tensor out = av;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= bv.data()[i];
    Node n;
    n.kind = OpKind::Hadamard;
    n.a = a.id;
    n.b = b.id;
    n.requires_grad = node(a).requires_grad || node(b).requires_grad;
    n.value = std::move(out);
    return Var{push(std::move(n))};
}

Var Tape::scalar_mul(Var a, double c) {
    check_var(a, "scalar_mul");
    Tensor out = node(a).value;
    for (double& v : out.data()) v *= c;
    Node n;
    n.kind = OpKind::ScalarMul;
    n.a = a.id;
    n.attr0 = c;
    n.requires_grad = node(a).requires_grad;
    n.value = std::move(out);
    return Var{push(std::move(n))};
}

Var Tape::tanh(Var a) {
    check_var(a, "tanh");
    Tensor out = node(a).value;
    for (double& v : out.data()) v = std::tanh(v);
    Node n;
    n.kind = OpKind::Tanh;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = std::move(out);
    return Var{push(std::move(n))};
}

Var Tape::sigmoid(Var a) {
    check_var(a, "sigmoid");
    Tensor out = node(a).value;
    for (double& v : out.data()) v = stable_sigmoid(v);
    Node n;
    n.kind = OpKind::Sigmoid;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = std::move(out);
    return Var{push(std::move(n))};
}

Var Tape::elu(Var a) {
    check_var(a, "elu");
    Tensor out = node(a).value;
    for (double& v : out.data()) {
        if (v < 0.0) v = std::expm1(v);
    }
    Node n;
    n.kind = OpKind::Elu;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = std::move(out);
    return Var{push(std::move(n))};
}

Var Tape::relu(Var a) {
    check_var(a, "relu");
    Tensor out = node(a).value;
    for (double& v : out.data()) {
        if (v < 0.0) v = 0.0;
    }
    Node n;
    n.kind = OpKind::Relu;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = std::move(out);
    return Var{push(std::move(n))};
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) {
        throw ShapeError("concat_rows: no inputs");
    }
    for (Var p : parts) check_var(p, "concat_rows");
    const int cols = node(parts[0]).value.cols();
    int rows = 0;
    bool req = false;
    for (Var p : parts) {
        const Tensor& t = node(p).value;
        if (t.cols() != cols) {
            throw ShapeError("concat_rows: column mismatch, " + shape_str(node(parts[0]).value) +
                             " vs " + shape_str(t));
        }
        rows += t.rows();
        req = req || node(p).requires_grad;
    }
    Tensor out(rows, cols);
    std::size_t off = 0;
    for (Var p : parts) {
        const Tensor& t = node(p).value;
        std::copy(t.data().begin(), t.data().end(), out.data().begin() + off);
        off += t.size();
    }
    Node n;
    n.kind = OpKind::ConcatRows;
    n.requires_grad = req;
    n.value = std::move(out);
    n.extra.reserve(parts.size());
    for (Var p : parts) n.extra.push_back(p.id);
    return Var{push(std::move(n))};
}

Var Tape::row_lp_norm_scale(Var a, double p, double eps) {
    check_var(a, "row_lp_norm_scale");
    if (p < 1.0 || eps <= 0.0) {
        throw ShapeError("row_lp_norm_scale: need p >= 1 and eps > 0");
    }
    const Tensor& av = node(a).value;
    Tensor out = av;
    for (int i = 0; i < av.rows(); ++i) {
        double acc = 0.0;
        for (int j = 0; j < av.cols(); ++j) acc += std::pow(std::fabs(av(i, j)), p);
        const double norm = std::pow(acc, 1.0 / p);
        const double denom = std::max(norm, eps);
        for (int j = 0; j < av.cols(); ++j) out(i, j) = av(i, j) / denom;
    }
    Node n;
    n.kind = OpKind::RowLpNormScale;
    n.a = a.id;
    n.attr0 = p;
    n.attr1 = eps;
    n.requires_grad = node(a).requires_grad;
    n.value = std::move(out);
    return Var{push(std::move(n))};
}

Var Tape::conv1d_valid(Var x, Var filter) {
    check_var(x, "conv1d_valid");
    check_var(filter, "conv1d_valid");
    const Tensor& xv = node(x).value;
    const Tensor& fv = node(filter).value;
    if (fv.rows() != 1) {
        throw ShapeError("conv1d_valid: filter must be 1xQ, got " + shape_str(fv));
    }
    const int T = xv.cols(), Q = fv.cols();
    if (Q > T) {
        throw ShapeError("conv1d_valid: filter length " + std::to_string(Q) +
                         " exceeds signal length " + std::to_string(T));
    }
    const int L = T - Q + 1;
    Tensor out(xv.rows(), L, 0.0);
    for (int i = 0; i < xv.rows(); ++i) {
        for (int s = 0; s < L; ++s) {
            double acc = 0.0;
            for (int t = 0; t < Q; ++t) acc += xv(i, s + t) * fv(0, t);
            out(i, s) = acc;
        }
    }
    Node n;
    n.kind = OpKind::Conv1dValid;
    n.a = x.id;
    n.b = filter.id;
    n.requires_grad = node(x).requires_grad || node(filter).requires_grad;
    n.value = std::move(out);
    return Var{push(std::move(n))};
}

Var Tape::maxpool_full(Var a) {
    check_var(a, "maxpool_full");
    const Tensor& av = node(a).value;
    if (av.cols() < 1) {
        throw ShapeError("maxpool_full: empty rows in " + shape_str(av));
    }
    Tensor out(av.rows(), 1);
    std::vector<int> argmax(av.rows());
    for (int i = 0; i < av.rows(); ++i) {
        int best = 0;
        double bv = av(i, 0);
        for (int j = 1; j < av.cols(); ++j) {
            // ties keep the lowest index for deterministic backward routing
            if (av(i, j) > bv) {
                bv = av(i, j);
                best = j;
            }
        }
        out(i, 0) = bv;
        argmax[i] = best;
    }
    Node n;
    n.kind = OpKind::MaxPoolFull;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = std::move(out);
    n.extra = std::move(argmax);
    return Var{push(std::move(n))};
}

Var Tape::sum(Var a) {
    check_var(a, "sum");
    double acc = 0.0;
    for (double v : node(a).value.data()) acc += v;
    Node n;
    n.kind = OpKind::Sum;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = Tensor(1, 1, {acc});
    return Var{push(std::move(n))};
}

Var Tape::sum_abs(Var a) {
    check_var(a, "sum_abs");
    double acc = 0.0;
    for (double v : node(a).value.data()) acc += std::fabs(v);
    Node n;
    n.kind = OpKind::SumAbs;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = Tensor(1, 1, {acc});
    return Var{push(std::move(n))};
}

Var Tape::transpose(Var a) {
    check_var(a, "transpose");
    Node n;
    n.kind = OpKind::Transpose;
    n.a = a.id;
    n.requires_grad = node(a).requires_grad;
    n.value = node(a).value.transposed();
    return Var{push(std::move(n))};
}

Var Tape::broadcast_add_row(Var a, Var row) {
    check_var(a, "broadcast_add_row");
    check_var(row, "broadcast_add_row");
    const Tensor& av = node(a).value;
    const Tensor& rv = node(row).value;
    if (rv.rows() != 1 || rv.cols() != av.cols()) {
        throw ShapeError("broadcast_add_row: row " + shape_str(rv) + " does not match " +
                         shape_str(av));
    }
    Tensor out = av;
    for (int i = 0; i < av.rows(); ++i) {
        for (int j = 0; j < av.cols(); ++j) out(i, j) += rv(0, j);
    }
    Node n;
    n.kind = OpKind::BroadcastAddRow;
    n.a = a.id;
    n.b = row.id;
    n.requires_grad = node(a).requires_grad || node(row).requires_grad;
    n.value = std::move(out);
    return Var{push(std::move(n))};
}

const Tensor& Tape::grad(Var v) const {
    check_var(v, "grad");
    const Node& n = node(v);
    if (n.has_grad) return n.grad;
    empty_grad_ = Tensor(n.value.rows(), n.value.cols(), 0.0);
    return empty_grad_;
}

Tensor& Tape::grad_buf(int id) {
    Node& n = nodes_[id];
    if (!n.has_grad) {
        n.grad = Tensor(n.value.rows(), n.value.cols(), 0.0);
        n.has_grad = true;
    }
    return n.grad;
}

void Tape::zero_grad() {
    for (Node& n : nodes_) {
        if (n.has_grad) {
            std::fill(n.grad.data().begin(), n.grad.data().end(), 0.0);
        }
    }
}

void Tape::clear() {
    nodes_.clear();
}

void Tape::backward(Var output) {
    check_var(output, "backward");
    const Node& out = node(output);
    if (out.value.rows() != 1 || out.value.cols() != 1) {
        throw ShapeError("backward: output must be scalar (1x1), got " + shape_str(out.value));
    }
    grad_buf(output.id)(0, 0) += 1.0;
    for (int id = output.id; id >= 0; --id) {
        Node& n = nodes_[id];
        if (!n.has_grad || !n.requires_grad || n.kind == OpKind::Leaf) continue;
        backward_step(id);
    }
}

void Tape::backward_step(int id) {
    Node& n = nodes_[id];
    const Tensor& g = n.grad;
    switch (n.kind) {
        case OpKind::Leaf:
            break;
        case OpKind::MatMul: {
            const Tensor& av = nodes_[n.a].value;
            const Tensor& bv = nodes_[n.b].value;
            const int m = av.rows(), k = av.cols(), p = bv.cols();
            if (nodes_[n.a].requires_grad) {
                Tensor& ga = grad_buf(n.a);  // ga += g * b^T
                for (int i = 0; i < m; ++i) {
                    for (int kk = 0; kk < k; ++kk) {
                        double acc = 0.0;
                        for (int j = 0; j < p; ++j) acc += g(i, j) * bv(kk, j);
                        ga(i, kk) += acc;
                    }
                }
            }
            if (nodes_[n.b].requires_grad) {
                Tensor& gb = grad_buf(n.b);  // gb += a^T * g
                for (int i = 0; i < m; ++i) {
                    for (int kk = 0; kk < k; ++kk) {
                        const double aik = av(i, kk);
                        if (aik == 0.0) continue;
                        for (int j = 0; j < p; ++j) gb(kk, j) += aik * g(i, j);
                    }
                }
            }
            break;
        }
        case OpKind::Add: {
            for (int src : {n.a, n.b}) {
                if (!nodes_[src].requires_grad) continue;
                Tensor& gs = grad_buf(src);
                for (std::size_t i = 0; i < gs.size(); ++i) gs.data()[i] += g.data()[i];
            }
            break;
        }
        case OpKind::Hadamard: {
            if (nodes_[n.a].requires_grad) {
                Tensor& ga = grad_buf(n.a);
                const Tensor& bv = nodes_[n.b].value;
                for (std::size_t i = 0; i < ga.size(); ++i)
                    ga.data()[i] += g.data()[i] * bv.data()[i];
            }
            if (nodes_[n.b].requires_grad) {
                Tensor& gb = grad_buf(n.b);
                const Tensor& av = nodes_[n.a].value;
                for (std::size_t i = 0; i < gb.size(); ++i)
                    gb.data()[i] += g.data()[i] * av.data()[i];
            }
            break;
        }
        case OpKind::ScalarMul: {
            if (nodes_[n.a].requires_grad) {
                Tensor& ga = grad_buf(n.a);
                for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g.data()[i] * n.attr0;
            }
            break;
        }
        case OpKind::Tanh: {
            if (nodes_[n.a].requires_grad) {
                Tensor& ga = grad_buf(n.a);
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    const double y = n.value.data()[i];
                    ga.data()[i] += g.data()[i] * (1.0 - y * y);
                }
            }
            break;
        }
        case OpKind::Sigmoid: {
            if (nodes_[n.a].requires_grad) {
                Tensor& ga = grad_buf(n.a);
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    const double y = n.value.data()[i];
                    ga.data()[i] += g.data()[i] * y * (1.0 - y);
                }
            }
            break;
        }
        case OpKind::Elu: {
            if (nodes_[n.a].requires_grad) {
                Tensor& ga = grad_buf(n.a);
                const Tensor& xv = nodes_[n.a].value;
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    const double x = xv.data()[i];
                    const double d = x >= 0.0 ? 1.0 : std::exp(x);
                    ga.data()[i] += g.data()[i] * d;
                }
            }
            break;
        }
        case OpKind::Relu: {
            if (nodes_[n.a].requires_grad) {
                Tensor& ga = grad_buf(n.a);
                const Tensor& xv = nodes_[n.a].value;
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    if (xv.data()[i] > 0.0) ga.data()[i] += g.data()[i];
                }
            }
            break;
        }
        case OpKind::ConcatRows: {
            std::size_t off = 0;
            for (int src : n.extra) {
                const std::size_t len = nodes_[src].value.size();
                if (nodes_[src].requires_grad) {
                    Tensor& gs = grad_buf(src);
                    for (std::size_t i = 0; i < len; ++i) gs.data()[i] += g.data()[off + i];
                }
                off += len;
            }
            break;
        }
        case OpKind::RowLpNormScale: {
            if (!nodes_[n.a].requires_grad) break;
            const Tensor& xv = nodes_[n.a].value;
            Tensor& ga = grad_buf(n.a);
            const double p = n.attr0, eps = n.attr1;
            for (int i = 0; i < xv.rows(); ++i) {
                double acc = 0.0;
                for (int j = 0; j < xv.cols(); ++j) acc += std::pow(std::fabs(xv(i, j)), p);
                const double norm = std::pow(acc, 1.0 / p);
                const double denom = std::max(norm, eps);
                if (norm <= eps) {
                    for (int j = 0; j < xv.cols(); ++j) ga(i, j) += g(i, j) / denom;
                } else {
                    double gy = 0.0;  // sum_j g_j * y_j
                    for (int j = 0; j < xv.cols(); ++j) gy += g(i, j) * n.value(i, j);
                    for (int j = 0; j < xv.cols(); ++j) {
                        const double x = xv(i, j);
                        const double dn =
                            sign0(x) * std::pow(std::fabs(x), p - 1.0) / std::pow(norm, p - 1.0);
                        ga(i, j) += g(i, j) / denom - gy / denom * dn;
                    }
                }
            }
            break;
        }
        case OpKind::Conv1dValid: {
            const Tensor& xv = nodes_[n.a].value;
            const Tensor& fv = nodes_[n.b].value;
            const int Q = fv.cols(), L = n.value.cols();
            if (nodes_[n.a].requires_grad) {
                Tensor& gx = grad_buf(n.a);
                for (int i = 0; i < xv.rows(); ++i) {
                    for (int s = 0; s < L; ++s) {
                        const double gs = g(i, s);
                        if (gs == 0.0) continue;
                        for (int t = 0; t < Q; ++t) gx(i, s + t) += gs * fv(0, t);
                    }
                }
            }
            if (nodes_[n.b].requires_grad) {
                Tensor& gf = grad_buf(n.b);
                for (int i = 0; i < xv.rows(); ++i) {
                    for (int s = 0; s < L; ++s) {
                        const double gs = g(i, s);
                        if (gs == 0.0) continue;
                        for (int t = 0; t < Q; ++t) gf(0, t) += gs * xv(i, s + t);
                    }
                }
            }
            break;
        }
        case OpKind::MaxPoolFull: {
            if (nodes_[n.a].requires_grad) {
                Tensor& ga = grad_buf(n.a);
                for (int i = 0; i < n.value.rows(); ++i) {
                    ga(i, n.extra[i]) += g(i, 0);
                }
            }
            break;
        }
        case OpKind::Sum: {
            if (nodes_[n.a].requires_grad) {
                Tensor& ga = grad_buf(n.a);
                const double gs = g(0, 0);
                for (double& v : ga.data()) v += gs;
            }
            break;
        }
        case OpKind::SumAbs: {
            if (nodes_[n.a].requires_grad) {
                Tensor& ga = grad_buf(n.a);
                const Tensor& xv = nodes_[n.a].value;
                const double gs = g(0, 0);
                for (std::size_t i = 0; i < ga.size(); ++i) {
                    ga.data()[i] += gs * sign0(xv.data()[i]);
                }
            }
            break;
        }
        case OpKind::Transpose: {
            if (nodes_[n.a].requires_grad) {
                Tensor& ga = grad_buf(n.a);
                for (int i = 0; i < g.rows(); ++i) {
                    for (int j = 0; j < g.cols(); ++j) ga(j, i) += g(i, j);
                }
            }
            break;
        }
        case OpKind::BroadcastAddRow: {
            if (nodes_[n.a].requires_grad) {
                Tensor& ga = grad_buf(n.a);
                for (std::size_t i = 0; i < ga.size(); ++i) ga.data()[i] += g.data()[i];
            }
            if (nodes_[n.b].requires_grad) {
                Tensor& gr = grad_buf(n.b);
                for (int i = 0; i < g.rows(); ++i) {
                    for (int j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
                }
            }
            break;
        }
    }
}

}  // namespace colagnn

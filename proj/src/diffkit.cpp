#include "diffkit.hpp"

#include <algorithm>
#include <cmath>

namespace pidlab {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

int Tape::push(Node n) {
    for (int id : n.in) {
        require(id >= 0 && id < int(nodes_.size()), "Tape: input id out of range");
        n.needs_grad = n.needs_grad || nodes_[id].needs_grad;
    }
    nodes_.push_back(std::move(n));
    return int(nodes_.size()) - 1;
}

int Tape::leaf(DenseTensor value, bool requires_grad) {
    Node n;
    n.op = Op::leaf;
    n.val = std::move(value);
    n.needs_grad = requires_grad;
    return push(std::move(n));
}

int Tape::affine(int x, int w, int b) {
    const auto &X = val(x), &W = val(w), &B = val(b);
    require(X.ndim() == 2 && W.ndim() == 2 && B.ndim() == 1, "affine: ranks");
    require(X.cols() == W.rows() && W.cols() == B.shape[0], "affine: shape mismatch");
    int n = X.rows(), d = X.cols(), h = W.cols();
    Node out;
    out.op = Op::affine;
    out.in = {x, w, b};
    out.val = DenseTensor({n, h});
    for (int i = 0; i < n; ++i) {
        double* o = out.val.v.data() + std::size_t(i) * h;
        for (int k = 0; k < h; ++k) o[k] = B.v[k];
        const double* xi = X.v.data() + std::size_t(i) * d;
        for (int j = 0; j < d; ++j) {
            double xv = xi[j];
            const double* wr = W.v.data() + std::size_t(j) * h;
            for (int k = 0; k < h; ++k) o[k] += xv * wr[k];
        }
    }
    return push(std::move(out));
}

int Tape::matmul(int a, int b) {
    const auto &A = val(a), &B = val(b);
    require(A.ndim() == 2 && B.ndim() == 2 && A.cols() == B.rows(), "matmul: shape mismatch");
    int n = A.rows(), k = A.cols(), m = B.cols();
    Node out;
    out.op = Op::matmul;
    out.in = {a, b};
    out.val = DenseTensor({n, m});
    for (int i = 0; i < n; ++i) {
        double* o = out.val.v.data() + std::size_t(i) * m;
        const double* ai = A.v.data() + std::size_t(i) * k;
        for (int j = 0; j < k; ++j) {
            double av = ai[j];
            const double* br = B.v.data() + std::size_t(j) * m;
            for (int c = 0; c < m; ++c) o[c] += av * br[c];
        }
    }
    return push(std::move(out));
}

int Tape::matmul_nt(int a, int b) {
    const auto &A = val(a), &B = val(b);
    require(A.ndim() == 2 && B.ndim() == 2 && A.cols() == B.cols(), "matmul_nt: shape mismatch");
    int n = A.rows(), k = A.cols(), m = B.rows();
    Node out;
    out.op = Op::matmul_nt;
    out.in = {a, b};
    out.val = DenseTensor({n, m});
    for (int i = 0; i < n; ++i) {
        const double* ai = A.v.data() + std::size_t(i) * k;
        double* o = out.val.v.data() + std::size_t(i) * m;
        for (int j = 0; j < m; ++j) {
            const double* bj = B.v.data() + std::size_t(j) * k;
            double acc = 0.0;
            for (int c = 0; c < k; ++c) acc += ai[c] * bj[c];
            o[j] = acc;
        }
    }
    return push(std::move(out));
}

namespace {
constexpr double kLeakySlope = 0.2;
}

int Tape::leaky_relu(int x) {
    Node out;
    out.op = Op::leaky_relu;
    out.in = {x};
    out.val = val(x);
    for (double& v : out.val.v)
        if (v < 0.0) v *= kLeakySlope;
    return push(std::move(out));
}

int Tape::tanh_fn(int x) {
    Node out;
    out.op = Op::tanh_fn;
    out.in = {x};
    out.val = val(x);
    for (double& v : out.val.v) v = std::tanh(v);
    return push(std::move(out));
}

int Tape::exp_fn(int x) {
    Node out;
    out.op = Op::exp_fn;
    out.in = {x};
    out.val = val(x);
    for (double& v : out.val.v) v = std::exp(v);
    return push(std::move(out));
}

int Tape::exp_shift(int x) {
    Node out;
    out.op = Op::exp_shift;
    out.in = {x};
    out.val = val(x);
    double s = *std::max_element(out.val.v.begin(), out.val.v.end());
    out.c = s;
    for (double& v : out.val.v) v = std::exp(v - s);
    return push(std::move(out));
}

int Tape::log_fn(int x) {
    Node out;
    out.op = Op::log_fn;
    out.in = {x};
    out.val = val(x);
    for (double& v : out.val.v) {
        if (!(v > 0.0)) throw numeric_error("log: non-positive input");
        v = std::log(v);
    }
    return push(std::move(out));
}

int Tape::add(int a, int b) {
    require(val(a).same_shape(val(b)), "add: shape mismatch");
    Node out;
    out.op = Op::add;
    out.in = {a, b};
    out.val = val(a);
    const auto& B = val(b);
    for (std::size_t i = 0; i < out.val.v.size(); ++i) out.val.v[i] += B.v[i];
    return push(std::move(out));
}

int Tape::sub(int a, int b) {
    require(val(a).same_shape(val(b)), "sub: shape mismatch");
    Node out;
    out.op = Op::sub;
    out.in = {a, b};
    out.val = val(a);
    const auto& B = val(b);
    for (std::size_t i = 0; i < out.val.v.size(); ++i) out.val.v[i] -= B.v[i];
    return push(std::move(out));
}

int Tape::mul(int a, int b) {
    require(val(a).same_shape(val(b)), "mul: shape mismatch");
    Node out;
    out.op = Op::mul;
    out.in = {a, b};
    out.val = val(a);
    const auto& B = val(b);
    for (std::size_t i = 0; i < out.val.v.size(); ++i) out.val.v[i] *= B.v[i];
    return push(std::move(out));
}

int Tape::scale(int x, double c) {
    Node out;
    out.op = Op::scale;
    out.in = {x};
    out.c = c;
    out.val = val(x);
    for (double& v : out.val.v) v *= c;
    return push(std::move(out));
}

int Tape::scale_rows(int x, DenseTensor t) {
    const auto& X = val(x);
    require(X.ndim() == 2 && t.ndim() == 1 && t.shape[0] == X.rows(),
            "scale_rows: shape mismatch");
    Node out;
    out.op = Op::scale_rows;
    out.in = {x};
    out.val = X;
    int c = X.cols();
    for (int i = 0; i < X.rows(); ++i)
        for (int j = 0; j < c; ++j) out.val.v[std::size_t(i) * c + j] *= t.v[i];
    out.aux = std::move(t);
    return push(std::move(out));
}

int Tape::scale_cols(int x, DenseTensor t) {
    const auto& X = val(x);
    require(X.ndim() == 2 && t.ndim() == 1 && t.shape[0] == X.cols(),
            "scale_cols: shape mismatch");
    Node out;
    out.op = Op::scale_cols;
    out.in = {x};
    out.val = X;
    int c = X.cols();
    for (int i = 0; i < X.rows(); ++i)
        for (int j = 0; j < c; ++j) out.val.v[std::size_t(i) * c + j] *= t.v[j];
    out.aux = std::move(t);
    return push(std::move(out));
}

int Tape::row_normalize(int x) {
    const auto& X = val(x);
    require(X.ndim() == 2, "row_normalize: rank");
    Node out;
    out.op = Op::row_norm;
    out.in = {x};
    out.val = X;
    int c = X.cols();
    out.aux = DenseTensor({X.rows()});  // cached row sums for the backward pass
    for (int i = 0; i < X.rows(); ++i) {
        double s = 0.0;
        for (int j = 0; j < c; ++j) s += X.v[std::size_t(i) * c + j];
        if (!(s > 0.0)) throw numeric_error("row_normalize: non-positive row sum");
        out.aux.v[i] = s;
        for (int j = 0; j < c; ++j) out.val.v[std::size_t(i) * c + j] /= s;
    }
    return push(std::move(out));
}

int Tape::col_normalize(int x) {
    const auto& X = val(x);
    require(X.ndim() == 2, "col_normalize: rank");
    Node out;
    out.op = Op::col_norm;
    out.in = {x};
    out.val = X;
    int c = X.cols();
    out.aux = DenseTensor({c});
    for (int j = 0; j < c; ++j) {
        double s = 0.0;
        for (int i = 0; i < X.rows(); ++i) s += X.v[std::size_t(i) * c + j];
        if (!(s > 0.0)) throw numeric_error("col_normalize: non-positive column sum");
        out.aux.v[j] = s;
        for (int i = 0; i < X.rows(); ++i) out.val.v[std::size_t(i) * c + j] /= s;
    }
    return push(std::move(out));
}

int Tape::mean_all(int x) {
    Node out;
    out.op = Op::mean_all;
    out.in = {x};
    double s = 0.0;
    for (double v : val(x).v) s += v;
    out.val = DenseTensor::scalar(s / double(val(x).size()));
    return push(std::move(out));
}

int Tape::sum_all(int x) {
    Node out;
    out.op = Op::sum_all;
    out.in = {x};
    double s = 0.0;
    for (double v : val(x).v) s += v;
    out.val = DenseTensor::scalar(s);
    return push(std::move(out));
}

int Tape::softmax_cross_entropy(int logits, std::vector<int> targets) {
    const auto& L = val(logits);
    require(L.ndim() == 2 && int(targets.size()) == L.rows(), "softmax_ce: shape mismatch");
    int n = L.rows(), c = L.cols();
    double loss = 0.0;
    for (int i = 0; i < n; ++i) {
        require(targets[i] >= 0 && targets[i] < c, "softmax_ce: target out of range");
        const double* row = L.v.data() + std::size_t(i) * c;
        double mx = *std::max_element(row, row + c);
        double lse = 0.0;
        for (int j = 0; j < c; ++j) lse += std::exp(row[j] - mx);
        loss += mx + std::log(lse) - row[targets[i]];
    }
    Node out;
    out.op = Op::softmax_ce;
    out.in = {logits};
    out.targets = std::move(targets);
    out.val = DenseTensor::scalar(loss / n);
    return push(std::move(out));
}

int Tape::outer_rows(int a, int b) {
    const auto &A = val(a), &B = val(b);
    require(A.ndim() == 2 && B.ndim() == 2 && A.rows() == B.rows(), "outer_rows: shape mismatch");
    int n = A.rows(), p = A.cols(), q = B.cols();
    Node out;
    out.op = Op::outer_rows;
    out.in = {a, b};
    out.val = DenseTensor({n, p * q});
    for (int i = 0; i < n; ++i) {
        const double* ai = A.v.data() + std::size_t(i) * p;
        const double* bi = B.v.data() + std::size_t(i) * q;
        double* o = out.val.v.data() + std::size_t(i) * p * q;
        for (int u = 0; u < p; ++u)
            for (int w = 0; w < q; ++w) o[u * q + w] = ai[u] * bi[w];
    }
    return push(std::move(out));
}

std::vector<DenseTensor> Tape::backward(int loss) const {
    require(loss >= 0 && loss < int(nodes_.size()), "backward: bad node id");
    require(nodes_[loss].val.size() == 1, "backward: loss must be scalar");

    std::vector<DenseTensor> grad(nodes_.size());
    auto ensure = [&](int id) -> DenseTensor& {
        if (grad[id].v.empty()) grad[id] = DenseTensor(nodes_[id].val.shape);
        return grad[id];
    };
    ensure(loss).v[0] = 1.0;

    for (int id = loss; id >= 0; --id) {
        const Node& n = nodes_[id];
        if (!n.needs_grad || grad[id].v.empty()) continue;
        const DenseTensor& g = grad[id];
        switch (n.op) {
            case Op::leaf:
                break;
            case Op::affine: {
                const auto &X = val(n.in[0]), &W = val(n.in[1]);
                int r = X.rows(), d = X.cols(), h = W.cols();
                if (nodes_[n.in[0]].needs_grad) {
                    auto& gx = ensure(n.in[0]);
                    for (int i = 0; i < r; ++i)
                        for (int j = 0; j < d; ++j) {
                            const double* wr = W.v.data() + std::size_t(j) * h;
                            const double* gi = g.v.data() + std::size_t(i) * h;
                            double acc = 0.0;
                            for (int k = 0; k < h; ++k) acc += gi[k] * wr[k];
                            gx.v[std::size_t(i) * d + j] += acc;
                        }
                }
                if (nodes_[n.in[1]].needs_grad) {
                    auto& gw = ensure(n.in[1]);
                    for (int i = 0; i < r; ++i) {
                        const double* xi = X.v.data() + std::size_t(i) * d;
                        const double* gi = g.v.data() + std::size_t(i) * h;
                        for (int j = 0; j < d; ++j) {
                            double xv = xi[j];
                            double* gw_r = gw.v.data() + std::size_t(j) * h;
                            for (int k = 0; k < h; ++k) gw_r[k] += xv * gi[k];
                        }
                    }
                }
                if (nodes_[n.in[2]].needs_grad) {
                    auto& gb = ensure(n.in[2]);
                    for (int i = 0; i < r; ++i)
                        for (int k = 0; k < h; ++k) gb.v[k] += g.v[std::size_t(i) * h + k];
                }
                break;
            }
            case Op::matmul: {
                const auto &A = val(n.in[0]), &B = val(n.in[1]);
                int r = A.rows(), k = A.cols(), m = B.cols();
                if (nodes_[n.in[0]].needs_grad) {
                    auto& ga = ensure(n.in[0]);  // g @ B^T
                    for (int i = 0; i < r; ++i)
                        for (int j = 0; j < k; ++j) {
                            const double* gi = g.v.data() + std::size_t(i) * m;
                            const double* bj = B.v.data() + std::size_t(j) * m;
                            double acc = 0.0;
                            for (int c = 0; c < m; ++c) acc += gi[c] * bj[c];
                            ga.v[std::size_t(i) * k + j] += acc;
                        }
                }
                if (nodes_[n.in[1]].needs_grad) {
                    auto& gb = ensure(n.in[1]);  // A^T @ g
                    for (int i = 0; i < r; ++i) {
                        const double* ai = A.v.data() + std::size_t(i) * k;
                        const double* gi = g.v.data() + std::size_t(i) * m;
                        for (int j = 0; j < k; ++j) {
                            double av = ai[j];
                            double* gb_r = gb.v.data() + std::size_t(j) * m;
                            for (int c = 0; c < m; ++c) gb_r[c] += av * gi[c];
                        }
                    }
                }
                break;
            }
            case Op::matmul_nt: {
                const auto &A = val(n.in[0]), &B = val(n.in[1]);
                int r = A.rows(), k = A.cols(), m = B.rows();
                if (nodes_[n.in[0]].needs_grad) {
                    auto& ga = ensure(n.in[0]);  // g @ B
                    for (int i = 0; i < r; ++i) {
                        const double* gi = g.v.data() + std::size_t(i) * m;
                        double* ga_r = ga.v.data() + std::size_t(i) * k;
                        for (int j = 0; j < m; ++j) {
                            double gv = gi[j];
                            const double* bj = B.v.data() + std::size_t(j) * k;
                            for (int c = 0; c < k; ++c) ga_r[c] += gv * bj[c];
                        }
                    }
                }
                if (nodes_[n.in[1]].needs_grad) {
                    auto& gb = ensure(n.in[1]);  // g^T @ A
                    for (int i = 0; i < r; ++i) {
                        const double* gi = g.v.data() + std::size_t(i) * m;
                        const double* ai = A.v.data() + std::size_t(i) * k;
                        for (int j = 0; j < m; ++j) {
                            double gv = gi[j];
                            double* gb_r = gb.v.data() + std::size_t(j) * k;
                            for (int c = 0; c < k; ++c) gb_r[c] += gv * ai[c];
                        }
                    }
                }
                break;
            }
            case Op::leaky_relu: {
                const auto& X = val(n.in[0]);
                auto& gx = ensure(n.in[0]);
                for (std::size_t i = 0; i < g.v.size(); ++i)
                    gx.v[i] += g.v[i] * (X.v[i] > 0.0 ? 1.0 : kLeakySlope);
                break;
            }
            case Op::tanh_fn: {
                auto& gx = ensure(n.in[0]);
                for (std::size_t i = 0; i < g.v.size(); ++i)
                    gx.v[i] += g.v[i] * (1.0 - n.val.v[i] * n.val.v[i]);
                break;
            }
            case Op::exp_fn:
            case Op::exp_shift: {
                auto& gx = ensure(n.in[0]);
                for (std::size_t i = 0; i < g.v.size(); ++i) gx.v[i] += g.v[i] * n.val.v[i];
                break;
            }
            case Op::log_fn: {
                const auto& X = val(n.in[0]);
                auto& gx = ensure(n.in[0]);
                for (std::size_t i = 0; i < g.v.size(); ++i) gx.v[i] += g.v[i] / X.v[i];
                break;
            }
            case Op::add: {
                if (nodes_[n.in[0]].needs_grad) {
                    auto& ga = ensure(n.in[0]);
                    for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
                }
                if (nodes_[n.in[1]].needs_grad) {
                    auto& gb = ensure(n.in[1]);
                    for (std::size_t i = 0; i < g.v.size(); ++i) gb.v[i] += g.v[i];
                }
                break;
            }
            case Op::sub: {
                if (nodes_[n.in[0]].needs_grad) {
                    auto& ga = ensure(n.in[0]);
                    for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i];
                }
                if (nodes_[n.in[1]].needs_grad) {
                    auto& gb = ensure(n.in[1]);
                    for (std::size_t i = 0; i < g.v.size(); ++i) gb.v[i] -= g.v[i];
                }
                break;
            }
            case Op::mul: {
                const auto &A = val(n.in[0]), &B = val(n.in[1]);
                if (nodes_[n.in[0]].needs_grad) {
                    auto& ga = ensure(n.in[0]);
                    for (std::size_t i = 0; i < g.v.size(); ++i) ga.v[i] += g.v[i] * B.v[i];
                }
                if (nodes_[n.in[1]].needs_grad) {
                    auto& gb = ensure(n.in[1]);
                    for (std::size_t i = 0; i < g.v.size(); ++i) gb.v[i] += g.v[i] * A.v[i];
                }
                break;
            }
            case Op::scale: {
                auto& gx = ensure(n.in[0]);
                for (std::size_t i = 0; i < g.v.size(); ++i) gx.v[i] += g.v[i] * n.c;
                break;
            }
            case Op::scale_rows: {
                auto& gx = ensure(n.in[0]);
                int c = n.val.cols();
                for (int i = 0; i < n.val.rows(); ++i)
                    for (int j = 0; j < c; ++j)
                        gx.v[std::size_t(i) * c + j] += g.v[std::size_t(i) * c + j] * n.aux.v[i];
                break;
            }
            case Op::scale_cols: {
                auto& gx = ensure(n.in[0]);
                int c = n.val.cols();
                for (int i = 0; i < n.val.rows(); ++i)
                    for (int j = 0; j < c; ++j)
                        gx.v[std::size_t(i) * c + j] += g.v[std::size_t(i) * c + j] * n.aux.v[j];
                break;
            }
            case Op::row_norm: {
                auto& gx = ensure(n.in[0]);
                int c = n.val.cols();
                for (int i = 0; i < n.val.rows(); ++i) {
                    const double* gi = g.v.data() + std::size_t(i) * c;
                    const double* yi = n.val.v.data() + std::size_t(i) * c;
                    double dot = 0.0;
                    for (int j = 0; j < c; ++j) dot += gi[j] * yi[j];
                    double inv = 1.0 / n.aux.v[i];
                    double* gx_r = gx.v.data() + std::size_t(i) * c;
                    for (int j = 0; j < c; ++j) gx_r[j] += (gi[j] - dot) * inv;
                }
                break;
            }
            case Op::col_norm: {
                auto& gx = ensure(n.in[0]);
                int c = n.val.cols();
                int r = n.val.rows();
                for (int j = 0; j < c; ++j) {
                    double dot = 0.0;
                    for (int i = 0; i < r; ++i)
                        dot += g.v[std::size_t(i) * c + j] * n.val.v[std::size_t(i) * c + j];
                    double inv = 1.0 / n.aux.v[j];
                    for (int i = 0; i < r; ++i)
                        gx.v[std::size_t(i) * c + j] +=
                            (g.v[std::size_t(i) * c + j] - dot) * inv;
                }
                break;
            }
            case Op::mean_all: {
                auto& gx = ensure(n.in[0]);
                double gv = g.v[0] / double(gx.v.size());
                for (double& v : gx.v) v += gv;
                break;
            }
            case Op::sum_all: {
                auto& gx = ensure(n.in[0]);
                for (double& v : gx.v) v += g.v[0];
                break;
            }
            case Op::softmax_ce: {
                const auto& L = val(n.in[0]);
                auto& gx = ensure(n.in[0]);
                int r = L.rows(), c = L.cols();
                double gv = g.v[0] / r;
                for (int i = 0; i < r; ++i) {
                    const double* row = L.v.data() + std::size_t(i) * c;
                    double mx = *std::max_element(row, row + c);
                    double lse = 0.0;
                    for (int j = 0; j < c; ++j) lse += std::exp(row[j] - mx);
                    double* gr = gx.v.data() + std::size_t(i) * c;
                    for (int j = 0; j < c; ++j) {
                        double p = std::exp(row[j] - mx) / lse;
                        gr[j] += gv * (p - (j == n.targets[i] ? 1.0 : 0.0));
                    }
                }
                break;
            }
            case Op::outer_rows: {
                const auto &A = val(n.in[0]), &B = val(n.in[1]);
                int r = A.rows(), p = A.cols(), q = B.cols();
                if (nodes_[n.in[0]].needs_grad) {
                    auto& ga = ensure(n.in[0]);
                    for (int i = 0; i < r; ++i)
                        for (int u = 0; u < p; ++u) {
                            const double* gi = g.v.data() + (std::size_t(i) * p + u) * q;
                            const double* bi = B.v.data() + std::size_t(i) * q;
                            double acc = 0.0;
                            for (int w = 0; w < q; ++w) acc += gi[w] * bi[w];
                            ga.v[std::size_t(i) * p + u] += acc;
                        }
                }
                if (nodes_[n.in[1]].needs_grad) {
                    auto& gb = ensure(n.in[1]);
                    for (int i = 0; i < r; ++i) {
                        const double* ai = A.v.data() + std::size_t(i) * p;
                        double* gb_r = gb.v.data() + std::size_t(i) * q;
                        for (int u = 0; u < p; ++u) {
                            const double* gi = g.v.data() + (std::size_t(i) * p + u) * q;
                            double av = ai[u];
                            for (int w = 0; w < q; ++w) gb_r[w] += av * gi[w];
                        }
                    }
                }
                break;
            }
        }
    }

    // trainable leaves that the loss never touched still deserve zeros
    for (std::size_t id = 0; id < nodes_.size(); ++id)
        if (nodes_[id].op == Op::leaf && nodes_[id].needs_grad && grad[id].v.empty())
            grad[id] = DenseTensor(nodes_[id].val.shape);
    return grad;
}

void adam_step(std::vector<double>& params, const std::vector<double>& grad, AdamState& state,
               double lr, double beta1, double beta2, double eps) {
    if (params.size() != grad.size()) throw std::invalid_argument("adam_step: size mismatch");
    if (state.m.size() != params.size()) {
        state.m.assign(params.size(), 0.0);
        state.v.assign(params.size(), 0.0);
        state.step = 0;
    }
    ++state.step;
    double bc1 = 1.0 - std::pow(beta1, double(state.step));
    double bc2 = 1.0 - std::pow(beta2, double(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * grad[i];
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * grad[i] * grad[i];
        double mhat = state.m[i] / bc1;
        double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace pidlab

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "types.hpp"

namespace pidlab {

// Row-major dense tensor, one to three axes.
struct DenseTensor {
    std::vector<int> shape;
    std::vector<double> v;

    DenseTensor() = default;
    explicit DenseTensor(std::vector<int> s) : shape(std::move(s)) {
        std::size_t n = 1;
        for (int d : shape) {
            if (d < 1) throw std::invalid_argument("DenseTensor: bad axis");
            n *= std::size_t(d);
        }
        v.assign(n, 0.0);
    }
    static DenseTensor scalar(double x) {
        DenseTensor t({1});
        t.v[0] = x;
        return t;
    }

    int ndim() const { return int(shape.size()); }
    std::size_t size() const { return v.size(); }
    int rows() const { return shape.at(0); }
    int cols() const { return shape.at(1); }
    double& at(int i, int j) { return v[std::size_t(i) * cols() + j]; }
    double at(int i, int j) const { return v[std::size_t(i) * cols() + j]; }
    bool same_shape(const DenseTensor& o) const { return shape == o.shape; }
};

// Reverse-mode tape over a fixed op set. Node IDs index construction order, so
// inputs always precede their consumers.
class Tape {
  public:
    // requires_grad marks trainable leaves; constants stay out of backward
    int leaf(DenseTensor value, bool requires_grad = false);

    int affine(int x, int w, int b);     // x (n,d) @ w (d,h) + row-broadcast b (h)
    int matmul(int a, int b);            // (n,k) @ (k,m)
    int matmul_nt(int a, int b);         // (n,k) @ (m,k)^T
    int leaky_relu(int x);               // slope 0.2 on the negative side
    int tanh_fn(int x);
    int exp_fn(int x);
    int exp_shift(int x);                // exp(x - max(x)); the shift is not differentiated
    int log_fn(int x);                   // requires positive entries
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);               // elementwise
    int scale(int x, double c);
    int scale_rows(int x, DenseTensor t);  // row i multiplied by constant t[i]
    int scale_cols(int x, DenseTensor t);
    int row_normalize(int x);            // rows sum to one; positive row sums required
    int col_normalize(int x);
    int mean_all(int x);                 // scalar
    int sum_all(int x);                  // scalar
    // mean over rows of cross-entropy between softmax(logits) and integer targets
    int softmax_cross_entropy(int logits, std::vector<int> targets);
    int outer_rows(int a, int b);        // (n,p),(n,q) -> (n,p*q), rowwise outer product

    const DenseTensor& value(int id) const { return nodes_[id].val; }
    std::size_t node_count() const { return nodes_.size(); }

    // gradient of the scalar at `loss` for every node; non-grad nodes get
    // empty tensors, unused trainable leaves get zeros
    std::vector<DenseTensor> backward(int loss) const;

  private:
    enum class Op {
        leaf, affine, matmul, matmul_nt, leaky_relu, tanh_fn, exp_fn, exp_shift,
        log_fn, add, sub, mul, scale, scale_rows, scale_cols, row_norm, col_norm,
        mean_all, sum_all, softmax_ce, outer_rows
    };
    struct Node {
        Op op;
        std::vector<int> in;
        DenseTensor val;
        DenseTensor aux;          // constant operand where the op takes one
        std::vector<int> targets; // class labels for softmax_ce
        double c = 0.0;
        bool needs_grad = false;
    };

    int push(Node n);
    const DenseTensor& val(int id) const { return nodes_[id].val; }

    std::vector<Node> nodes_;
};

struct AdamState {
    std::vector<double> m, v;
    long step = 0;
};

// standard Adam with bias correction; state grows lazily to the param size
void adam_step(std::vector<double>& params, const std::vector<double>& grad, AdamState& state,
               double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

}  // namespace pidlab

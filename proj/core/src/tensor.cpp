#include "emoscale/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "emoscale/errors.hpp"

namespace emoscale {

namespace {

std::atomic<std::uint64_t> next_node_id{1};
thread_local int no_grad_depth = 0;

NodePtr new_node(Shape shape, std::vector<double> data, bool requires_grad) {
    auto node = std::make_shared<Node>();
    node->id = next_node_id.fetch_add(1, std::memory_order_relaxed);
    node->shape = std::move(shape);
    node->data = std::move(data);
    node->requires_grad = requires_grad;
    return node;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape()) {
        throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                             " vs " + shape_to_string(b.shape()));
    }
}

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
    if (x.rank() != rank) {
        throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) +
                             ", got shape " + shape_to_string(x.shape()));
    }
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
    std::ostringstream out;
    out << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << ", ";
        out << shape[i];
    }
    out << ']';
    return out.str();
}

std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

// ---- Tensor ---------------------------------------------------------------

Tensor::Tensor() : node_(new_node({}, {0.0}, false)) {}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
    for (auto d : shape) {
        if (d == 0) throw DimensionError("tensor dimensions must be positive, got " + shape_to_string(shape));
    }
    if (shape_numel(shape) != data.size()) {
        throw DimensionError("shape " + shape_to_string(shape) + " does not match " +
                             std::to_string(data.size()) + " values");
    }
    return Tensor(new_node(std::move(shape), std::move(data), requires_grad));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const auto n = shape_numel(shape);
    return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from({}, {value}, requires_grad); }

std::size_t Tensor::dim(std::size_t axis) const {
    if (axis >= rank()) {
        throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " + shape_to_string(shape()));
    }
    return node_->shape[axis];
}

double Tensor::item() const {
    if (numel() != 1) throw ContractError("item() on tensor of shape " + shape_to_string(shape()));
    return node_->data[0];
}

double Tensor::at(std::size_t row, std::size_t col) const {
    return node_->data[row * node_->shape.back() + col];
}

Tensor Tensor::detach(bool requires_grad) const { return from(shape(), node_->data, requires_grad); }

Tensor Tensor::make_result(Shape shape, std::vector<double> data, std::vector<Tensor> parents, BackwardFn backward) {
    bool track = grad_enabled() &&
                 std::any_of(parents.begin(), parents.end(), [](const Tensor& p) { return p.requires_grad(); });
    auto node = new_node(std::move(shape), std::move(data), track);
    if (track) {
        node->parents.reserve(parents.size());
        for (auto& p : parents) node->parents.push_back(p.node_);
        node->backward = std::move(backward);
    }
    return Tensor(std::move(node));
}

// ---- GradientMap ----------------------------------------------------------

const std::vector<double>* GradientMap::find(const Tensor& t) const {
    auto it = entries_.find(t.id());
    return it == entries_.end() ? nullptr : &it->second;
}

const std::vector<double>& GradientMap::at(const Tensor& t) const {
    auto* g = find(t);
    if (!g) throw ContractError("no gradient recorded for tensor " + std::to_string(t.id()));
    return *g;
}

bool grad_enabled() { return no_grad_depth == 0; }
NoGradGuard::NoGradGuard() { ++no_grad_depth; }
NoGradGuard::~NoGradGuard() { --no_grad_depth; }

GradientMap backward(const Tensor& loss) {
    if (loss.numel() != 1) {
        throw ContractError("backward requires a scalar loss, got shape " + shape_to_string(loss.shape()));
    }
    GradientMap result;
    if (!loss.requires_grad()) return result;

    // Iterative post-order DFS gives a topological order (parents first).
    std::vector<const Node*> order;
    std::unordered_set<const Node*> visited;
    std::vector<std::pair<const Node*, std::size_t>> stack;
    stack.emplace_back(loss.node().get(), 0);
    visited.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            const Node* parent = node->parents[next++].get();
            if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    auto& grads = result.entries();
    grads[loss.id()] = std::vector<double>(1, 1.0);
    std::vector<std::vector<double>*> parent_grads;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const Node* node = *it;
        auto found = grads.find(node->id);
        if (found == grads.end() || !node->backward) continue;
        parent_grads.assign(node->parents.size(), nullptr);
        for (std::size_t i = 0; i < node->parents.size(); ++i) {
            const Node* p = node->parents[i].get();
            if (!p->requires_grad) continue;
            auto [slot, inserted] = grads.try_emplace(p->id);
            if (inserted) slot->second.assign(p->data.size(), 0.0);
            parent_grads[i] = &slot->second;
        }
        // unordered_map references stay valid across rehashing.
        node->backward(*node, found->second, parent_grads);
    }
    return result;
}

// ---- linear algebra -------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw DimensionError("matmul: incompatible shapes " + shape_to_string(a.shape()) + " and " +
                             shape_to_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<double> out(m * n, 0.0);
    const double* pa = a.data().data();
    const double* pb = b.data().data();
    for (std::size_t i = 0; i < m; ++i) {
        double* row = out.data() + i * n;
        for (std::size_t p = 0; p < k; ++p) {
            const double av = pa[i * k + p];
            const double* brow = pb + p * n;
            for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
        }
    }
    return Tensor::make_result({m, n}, std::move(out), {a, b}, [m, k, n](const Node& self, std::span<const double> g, std::span<std::vector<double>*> pg) {
        const auto& av = self.parents[0]->data;
        const auto& bv = self.parents[1]->data;
        if (pg[0]) {
            // dA = G * B^T
            auto& ga = *pg[0];
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t p = 0; p < k; ++p) {
                    const double* brow = bv.data() + p * n;
                    const double* grow = g.data() + i * n;
                    double s = 0.0;
                    for (std::size_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                    ga[i * k + p] += s;
                }
            }
        }
        if (pg[1]) {
            // dB = A^T * G
            auto& gb = *pg[1];
            for (std::size_t i = 0; i < m; ++i) {
                const double* grow = g.data() + i * n;
                for (std::size_t p = 0; p < k; ++p) {
                    const double aval = av[i * k + p];
                    double* gbrow = gb.data() + p * n;
                    for (std::size_t j = 0; j < n; ++j) gbrow[j] += aval * grow[j];
                }
            }
        }
    });
}

Tensor transpose(const Tensor& x) {
    require_rank(x, 2, "transpose");
    const std::size_t r = x.dim(0), c = x.dim(1);
    std::vector<double> out(r * c);
    auto in = x.data();
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) out[j * r + i] = in[i * c + j];
    return Tensor::make_result({c, r}, std::move(out), {x}, [r, c](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
        auto& gx = *pg[0];
        for (std::size_t i = 0; i < r; ++i)
            for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j * r + i];
    });
}

Tensor reshape(const Tensor& x, Shape shape) {
    if (shape_numel(shape) != x.numel()) {
        throw DimensionError("reshape: cannot view " + shape_to_string(x.shape()) + " as " + shape_to_string(shape));
    }
    return Tensor::make_result(std::move(shape), x.values(), {x}, [](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
        auto& gx = *pg[0];
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
    });
}

// ---- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
        for (auto* gp : pg) {
            if (!gp) continue;
            for (std::size_t i = 0; i < g.size(); ++i) (*gp)[i] += g[i];
        }
    });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
    return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
        if (pg[0])
            for (std::size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i];
        if (pg[1])
            for (std::size_t i = 0; i < g.size(); ++i) (*pg[1])[i] -= g[i];
    });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    std::vector<double> out(a.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    return Tensor::make_result(a.shape(), std::move(out), {a, b}, [](const Node& self, std::span<const double> g, std::span<std::vector<double>*> pg) {
        const auto& av = self.parents[0]->data;
        const auto& bv = self.parents[1]->data;
        if (pg[0])
            for (std::size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i] * bv[i];
        if (pg[1])
            for (std::size_t i = 0; i < g.size(); ++i) (*pg[1])[i] += g[i] * av[i];
    });
}

Tensor scale(const Tensor& x, double factor) {
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] * factor;
    return Tensor::make_result(x.shape(), std::move(out), {x}, [factor](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
        for (std::size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i] * factor;
    });
}

Tensor relu(const Tensor& x) {
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
    return Tensor::make_result(x.shape(), std::move(out), {x}, [](const Node& self, std::span<const double> g, std::span<std::vector<double>*> pg) {
        const auto& xv = self.parents[0]->data;
        // subgradient 0 at exactly zero
        for (std::size_t i = 0; i < g.size(); ++i)
            if (xv[i] > 0.0) (*pg[0])[i] += g[i];
    });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
    if (x.rank() == 0 || bias.rank() != 1 || bias.dim(0) != x.shape().back()) {
        throw DimensionError("add_bias: bias " + shape_to_string(bias.shape()) + " does not match last axis of " +
                             shape_to_string(x.shape()));
    }
    const std::size_t d = bias.dim(0);
    std::vector<double> out(x.numel());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = x[i] + bias[i % d];
    return Tensor::make_result(x.shape(), std::move(out), {x, bias}, [d](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
        if (pg[0])
            for (std::size_t i = 0; i < g.size(); ++i) (*pg[0])[i] += g[i];
        if (pg[1])
            for (std::size_t i = 0; i < g.size(); ++i) (*pg[1])[i % d] += g[i];
    });
}

Tensor mean(const Tensor& x) {
    double s = 0.0;
    for (double v : x.data()) s += v;
    const double n = static_cast<double>(x.numel());
    return Tensor::make_result({}, {s / n}, {x}, [n](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
        const double share = g[0] / n;
        for (auto& v : *pg[0]) v += share;
    });
}

Tensor mean_rows(const Tensor& x) {
    require_rank(x, 2, "mean_rows");
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    std::vector<double> out(cols, 0.0);
    auto in = x.data();
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) out[j] += in[i * cols + j];
    const double inv = 1.0 / static_cast<double>(rows);
    for (auto& v : out) v *= inv;
    return Tensor::make_result({cols}, std::move(out), {x}, [rows, cols, inv](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
        auto& gx = *pg[0];
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) gx[i * cols + j] += g[j] * inv;
    });
}

Tensor concat_last(std::span<const Tensor> parts) {
    if (parts.empty()) throw DimensionError("concat_last: no inputs");
    const Shape& first = parts[0].shape();
    if (first.empty()) throw DimensionError("concat_last: scalar inputs have no last axis");
    Shape lead(first.begin(), first.end() - 1);
    std::vector<std::size_t> widths;
    std::size_t total = 0;
    for (const auto& p : parts) {
        Shape s = p.shape();
        if (s.size() != first.size() || !std::equal(lead.begin(), lead.end(), s.begin())) {
            throw DimensionError("concat_last: shape " + shape_to_string(s) + " incompatible with " + shape_to_string(first));
        }
        widths.push_back(s.back());
        total += s.back();
    }
    const std::size_t rows = shape_numel(lead);
    std::vector<double> out(rows * total);
    std::size_t offset = 0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        auto in = parts[k].data();
        for (std::size_t r = 0; r < rows; ++r)
            std::copy_n(in.data() + r * widths[k], widths[k], out.data() + r * total + offset);
        offset += widths[k];
    }
    Shape shape = lead;
    shape.push_back(total);
    std::vector<Tensor> parents(parts.begin(), parts.end());
    return Tensor::make_result(std::move(shape), std::move(out), std::move(parents),
                               [rows, total, widths](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
        std::size_t off = 0;
        for (std::size_t k = 0; k < pg.size(); ++k) {
            if (pg[k]) {
                auto& gk = *pg[k];
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < widths[k]; ++j) gk[r * widths[k] + j] += g[r * total + off + j];
            }
            off += widths[k];
        }
    });
}

Tensor concat_last(std::initializer_list<Tensor> parts) {
    return concat_last(std::span<const Tensor>(parts.begin(), parts.size()));
}

Tensor stack(std::span<const Tensor> parts) {
    if (parts.empty()) throw DimensionError("stack: no inputs");
    const Shape& first = parts[0].shape();
    for (const auto& p : parts) require_same_shape(parts[0], p, "stack");
    const std::size_t block = parts[0].numel();
    std::vector<double> out;
    out.reserve(block * parts.size());
    for (const auto& p : parts) out.insert(out.end(), p.data().begin(), p.data().end());
    Shape shape{parts.size()};
    shape.insert(shape.end(), first.begin(), first.end());
    std::vector<Tensor> parents(parts.begin(), parts.end());
    return Tensor::make_result(std::move(shape), std::move(out), std::move(parents),
                               [block](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
        for (std::size_t k = 0; k < pg.size(); ++k) {
            if (!pg[k]) continue;
            for (std::size_t j = 0; j < block; ++j) (*pg[k])[j] += g[k * block + j];
        }
    });
}

// ---- normalization and pooling --------------------------------------------

Tensor softmax(const Tensor& x, std::size_t axis) {
    if (axis >= x.rank()) {
        throw DimensionError("softmax: axis " + std::to_string(axis) + " invalid for shape " + shape_to_string(x.shape()));
    }
    const auto& s = x.shape();
    std::size_t outer = 1, inner = 1;
    for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
    for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
    const std::size_t n = s[axis];
    auto in = x.data();
    std::vector<double> out(x.numel());
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t i = 0; i < inner; ++i) {
            const std::size_t base = o * n * inner + i;
            double mx = in[base];
            for (std::size_t k = 1; k < n; ++k) mx = std::max(mx, in[base + k * inner]);
            double sum = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                double e = std::exp(in[base + k * inner] - mx);
                out[base + k * inner] = e;
                sum += e;
            }
            for (std::size_t k = 0; k < n; ++k) out[base + k * inner] /= sum;
        }
    }
    return Tensor::make_result(s, std::move(out), {x}, [outer, inner, n](const Node& self, std::span<const double> g, std::span<std::vector<double>*> pg) {
        const auto& y = self.data;
        auto& gx = *pg[0];
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t i = 0; i < inner; ++i) {
                const std::size_t base = o * n * inner + i;
                double dot = 0.0;
                for (std::size_t k = 0; k < n; ++k) dot += g[base + k * inner] * y[base + k * inner];
                for (std::size_t k = 0; k < n; ++k) {
                    const std::size_t idx = base + k * inner;
                    gx[idx] += y[idx] * (g[idx] - dot);
                }
            }
        }
    });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
    if (!(eps > 0.0)) throw ParameterError("layer_norm: eps must be positive");
    if (x.rank() == 0 || gamma.rank() != 1 || beta.rank() != 1 || gamma.dim(0) != x.shape().back() ||
        beta.dim(0) != x.shape().back()) {
        throw DimensionError("layer_norm: x " + shape_to_string(x.shape()) + ", gamma " + shape_to_string(gamma.shape()) +
                             ", beta " + shape_to_string(beta.shape()));
    }
    const std::size_t d = gamma.dim(0);
    const std::size_t rows = x.numel() / d;
    auto in = x.data();
    auto gv = gamma.data();
    auto bv = beta.data();
    std::vector<double> out(x.numel());
    // normalized values and inverse std are cached for the backward pass
    auto xhat = std::make_shared<std::vector<double>>(x.numel());
    auto inv_std = std::make_shared<std::vector<double>>(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = in.data() + r * d;
        double mu = 0.0;
        for (std::size_t j = 0; j < d; ++j) mu += row[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (std::size_t j = 0; j < d; ++j) var += (row[j] - mu) * (row[j] - mu);
        var /= static_cast<double>(d);
        const double is = 1.0 / std::sqrt(var + eps);
        (*inv_std)[r] = is;
        for (std::size_t j = 0; j < d; ++j) {
            const double h = (row[j] - mu) * is;
            (*xhat)[r * d + j] = h;
            out[r * d + j] = gv[j] * h + bv[j];
        }
    }
    return Tensor::make_result(x.shape(), std::move(out), {x, gamma, beta},
                               [d, rows, xhat, inv_std](const Node& self, std::span<const double> g, std::span<std::vector<double>*> pg) {
        const auto& gam = self.parents[1]->data;
        const auto& xh = *xhat;
        if (pg[1])
            for (std::size_t i = 0; i < g.size(); ++i) (*pg[1])[i % d] += g[i] * xh[i];
        if (pg[2])
            for (std::size_t i = 0; i < g.size(); ++i) (*pg[2])[i % d] += g[i];
        if (pg[0]) {
            auto& gx = *pg[0];
            const double inv_d = 1.0 / static_cast<double>(d);
            for (std::size_t r = 0; r < rows; ++r) {
                double mean_dh = 0.0, mean_dh_xh = 0.0;
                for (std::size_t j = 0; j < d; ++j) {
                    const double dh = g[r * d + j] * gam[j];
                    mean_dh += dh;
                    mean_dh_xh += dh * xh[r * d + j];
                }
                mean_dh *= inv_d;
                mean_dh_xh *= inv_d;
                for (std::size_t j = 0; j < d; ++j) {
                    const double dh = g[r * d + j] * gam[j];
                    gx[r * d + j] += (*inv_std)[r] * (dh - mean_dh - xh[r * d + j] * mean_dh_xh);
                }
            }
        }
    });
}

Tensor avg_pool1d(const Tensor& x, std::size_t kernel, std::size_t stride) {
    require_rank(x, 2, "avg_pool1d");
    if (kernel == 0 || stride == 0) throw ParameterError("avg_pool1d: kernel and stride must be >= 1");
    const std::size_t len = x.dim(0), ch = x.dim(1);
    if (len < kernel) {
        throw InputError("avg_pool1d: input length " + std::to_string(len) + " shorter than kernel " + std::to_string(kernel));
    }
    const std::size_t out_len = (len - kernel) / stride + 1;
    const double inv = 1.0 / static_cast<double>(kernel);
    auto in = x.data();
    std::vector<double> out(out_len * ch, 0.0);
    for (std::size_t t = 0; t < out_len; ++t) {
        for (std::size_t k = 0; k < kernel; ++k) {
            const double* row = in.data() + (t * stride + k) * ch;
            for (std::size_t c = 0; c < ch; ++c) out[t * ch + c] += row[c];
        }
        for (std::size_t c = 0; c < ch; ++c) out[t * ch + c] *= inv;
    }
    return Tensor::make_result({out_len, ch}, std::move(out), {x},
                               [out_len, ch, kernel, stride, inv](const Node&, std::span<const double> g, std::span<std::vector<double>*> pg) {
        auto& gx = *pg[0];
        for (std::size_t t = 0; t < out_len; ++t)
            for (std::size_t k = 0; k < kernel; ++k)
                for (std::size_t c = 0; c < ch; ++c) gx[(t * stride + k) * ch + c] += g[t * ch + c] * inv;
    });
}

}  // namespace emoscale

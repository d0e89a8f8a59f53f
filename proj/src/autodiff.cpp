#include "amr/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace amr {

// ---------------------------------------------------------------------------
// ParamStore

Parameter& ParamStore::add(const std::string& name, std::vector<int> shape, Init init, Rng& rng) {
    if (params_.count(name)) throw std::runtime_error("duplicate parameter '" + name + "'");
    Parameter p;
    p.name = name;
    p.value = Tensor(shape);
    p.grad = Tensor(shape);
    switch (init) {
        case Init::Zeros:
            break;
        case Init::Glorot: {
            double s = std::sqrt(6.0 / (p.value.rows() + p.value.cols()));
            for (double& x : p.value.v) x = rng.real(-s, s);
            break;
        }
        case Init::Uniform01:
            for (double& x : p.value.v) x = rng.real(-0.1, 0.1);
            break;
    }
    return params_.emplace(name, std::move(p)).first->second;
}

Parameter& ParamStore::get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::runtime_error("no parameter '" + name + "'");
    return it->second;
}
const Parameter& ParamStore::get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::runtime_error("no parameter '" + name + "'");
    return it->second;
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : params_) out.push_back(k);
    return out;
}

size_t ParamStore::scalar_count() const {
    size_t n = 0;
    for (const auto& [k, p] : params_) n += p.value.size();
    return n;
}

void ParamStore::zero_grads() {
    for (auto& [k, p] : params_) std::fill(p.grad.v.begin(), p.grad.v.end(), 0.0);
}

double ParamStore::grad_norm() const {
    double s = 0;
    for (const auto& [k, p] : params_)
        for (double g : p.grad.v) s += g * g;
    return std::sqrt(s);
}

void ParamStore::sgd_step(double lr, double clip) {
    double norm = grad_norm();
    double factor = (clip > 0 && norm > clip) ? clip / norm : 1.0;
    for (auto& [k, p] : params_)
        for (size_t i = 0; i < p.value.v.size(); ++i) p.value.v[i] -= lr * factor * p.grad.v[i];
}

namespace {

void write_u32(std::ostream& out, uint32_t x) { out.write(reinterpret_cast<char*>(&x), 4); }
uint32_t read_u32(std::istream& in) {
    uint32_t x = 0;
    in.read(reinterpret_cast<char*>(&x), 4);
    return x;
}

constexpr char kMagic[8] = {'A', 'M', 'R', 'C', 'K', 'P', 'T', '1'};

}  // namespace

void ParamStore::save(const std::string& path, const std::string& config_snapshot) const {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write checkpoint: " + tmp);
        out.write(kMagic, 8);
        write_u32(out, static_cast<uint32_t>(config_snapshot.size()));
        out.write(config_snapshot.data(), static_cast<std::streamsize>(config_snapshot.size()));
        write_u32(out, static_cast<uint32_t>(params_.size()));
        for (const auto& [name, p] : params_) {
            write_u32(out, static_cast<uint32_t>(name.size()));
            out.write(name.data(), static_cast<std::streamsize>(name.size()));
            write_u32(out, static_cast<uint32_t>(p.value.shape.size()));
            for (int d : p.value.shape) write_u32(out, static_cast<uint32_t>(d));
            out.write(reinterpret_cast<const char*>(p.value.v.data()),
                      static_cast<std::streamsize>(p.value.v.size() * sizeof(double)));
        }
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

std::string ParamStore::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a checkpoint file: " + path);
    std::string config(read_u32(in), '\0');
    in.read(config.data(), static_cast<std::streamsize>(config.size()));
    uint32_t count = read_u32(in);
    params_.clear();
    for (uint32_t i = 0; i < count; ++i) {
        std::string name(read_u32(in), '\0');
        in.read(name.data(), static_cast<std::streamsize>(name.size()));
        std::vector<int> shape(read_u32(in));
        for (int& d : shape) d = static_cast<int>(read_u32(in));
        Parameter p;
        p.name = name;
        p.value = Tensor(shape);
        p.grad = Tensor(shape);
        in.read(reinterpret_cast<char*>(p.value.v.data()),
                static_cast<std::streamsize>(p.value.v.size() * sizeof(double)));
        if (!in) throw std::runtime_error("truncated checkpoint: " + path);
        params_.emplace(name, std::move(p));
    }
    return config;
}

// ---------------------------------------------------------------------------
// Tape

void Tape::expect_vec(const Tensor& t, const char* what) {
    if (t.shape.size() != 1)
        throw ShapeMismatch(std::string(what) + ": expected a vector, got rank " +
                            std::to_string(t.shape.size()));
}

Var Tape::constant(Tensor t) {
    Node n{Op::Constant, std::move(t), {}, {}, {}, 0.0, nullptr};
    return push(std::move(n));
}

Var Tape::param(Parameter& p) {
    Node n{Op::Param, p.value, {}, {}, {}, 0.0, &p};
    return push(std::move(n));
}

Var Tape::lookup(Parameter& table, int row) {
    if (table.value.shape.size() != 2) throw ShapeMismatch("lookup: table must be a matrix");
    int cols = table.value.shape[1];
    if (row < 0 || row >= table.value.shape[0])
        throw std::runtime_error("lookup: row out of range in " + table.name);
    Tensor t({cols});
    std::copy_n(table.value.v.begin() + static_cast<size_t>(row) * cols, cols, t.v.begin());
    Node n{Op::Lookup, std::move(t), {}, {}, {row}, 0.0, &table};
    return push(std::move(n));
}

Var Tape::matvec(Var W, Var x) {
    const Tensor& w = val(W);
    const Tensor& xv = val(x);
    if (w.shape.size() != 2 || xv.shape.size() != 1 || w.shape[1] != xv.shape[0])
        throw ShapeMismatch("matvec: {" + std::to_string(w.rows()) + "," +
                            std::to_string(w.cols()) + "} * {" + std::to_string(xv.rows()) + "}");
    Tensor out({w.shape[0]});
    for (int i = 0; i < w.shape[0]; ++i) {
        double s = 0;
        const double* row = w.v.data() + static_cast<size_t>(i) * w.shape[1];
        for (int j = 0; j < w.shape[1]; ++j) s += row[j] * xv.v[static_cast<size_t>(j)];
        out.v[static_cast<size_t>(i)] = s;
    }
    return push(Node{Op::MatVec, std::move(out), {}, {W.id, x.id}, {}, 0.0, nullptr});
}

Var Tape::matvec_t(Var W, Var x) {
    const Tensor& w = val(W);
    const Tensor& xv = val(x);
    if (w.shape.size() != 2 || xv.shape.size() != 1 || w.shape[0] != xv.shape[0])
        throw ShapeMismatch("matvec_t: {" + std::to_string(w.rows()) + "," +
                            std::to_string(w.cols()) + "}^T * {" + std::to_string(xv.rows()) +
                            "}");
    Tensor out({w.shape[1]});
    for (int i = 0; i < w.shape[0]; ++i) {
        const double* row = w.v.data() + static_cast<size_t>(i) * w.shape[1];
        double xi = xv.v[static_cast<size_t>(i)];
        for (int j = 0; j < w.shape[1]; ++j) out.v[static_cast<size_t>(j)] += row[j] * xi;
    }
    return push(Node{Op::MatVecT, std::move(out), {}, {W.id, x.id}, {}, 0.0, nullptr});
}

Var Tape::affine(Var W, Var x, Var b) {
    Var wx = matvec(W, x);
    return add(wx, b);
}

Var Tape::add(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (ta.shape != tb.shape)
        throw ShapeMismatch("add: {" + std::to_string(ta.rows()) + "} vs {" +
                            std::to_string(tb.rows()) + "}");
    Tensor out = ta;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += tb.v[i];
    return push(Node{Op::Add, std::move(out), {}, {a.id, b.id}, {}, 0.0, nullptr});
}

Var Tape::add_many(std::span<const Var> xs) {
    if (xs.empty()) throw ShapeMismatch("add_many: no inputs");
    Tensor out = val(xs[0]);
    std::vector<int> args{xs[0].id};
    for (size_t k = 1; k < xs.size(); ++k) {
        const Tensor& t = val(xs[k]);
        if (t.shape != out.shape) throw ShapeMismatch("add_many: shape mismatch");
        for (size_t i = 0; i < out.v.size(); ++i) out.v[i] += t.v[i];
        args.push_back(xs[k].id);
    }
    return push(Node{Op::AddMany, std::move(out), {}, std::move(args), {}, 0.0, nullptr});
}

Var Tape::sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var Tape::scale(Var a, double c) {
    Tensor out = val(a);
    for (double& x : out.v) x *= c;
    return push(Node{Op::Scale, std::move(out), {}, {a.id}, {}, c, nullptr});
}

Var Tape::mul(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (ta.shape != tb.shape) throw ShapeMismatch("mul: shape mismatch");
    Tensor out = ta;
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] *= tb.v[i];
    return push(Node{Op::Mul, std::move(out), {}, {a.id, b.id}, {}, 0.0, nullptr});
}

Var Tape::tanh_(Var a) {
    Tensor out = val(a);
    for (double& x : out.v) x = std::tanh(x);
    return push(Node{Op::Tanh, std::move(out), {}, {a.id}, {}, 0.0, nullptr});
}

Var Tape::sigmoid(Var a) {
    Tensor out = val(a);
    for (double& x : out.v) x = 1.0 / (1.0 + std::exp(-x));
    return push(Node{Op::Sigmoid, std::move(out), {}, {a.id}, {}, 0.0, nullptr});
}

Var Tape::relu(Var a) {
    Tensor out = val(a);
    for (double& x : out.v) x = std::max(0.0, x);
    return push(Node{Op::Relu, std::move(out), {}, {a.id}, {}, 0.0, nullptr});
}

Var Tape::concat(std::span<const Var> xs) {
    if (xs.empty()) throw ShapeMismatch("concat: no inputs");
    int total = 0;
    std::vector<int> args;
    for (Var x : xs) {
        expect_vec(val(x), "concat");
        total += val(x).shape[0];
        args.push_back(x.id);
    }
    Tensor out({total});
    size_t off = 0;
    for (Var x : xs) {
        const Tensor& t = val(x);
        std::copy(t.v.begin(), t.v.end(), out.v.begin() + static_cast<long>(off));
        off += t.v.size();
    }
    return push(Node{Op::Concat, std::move(out), {}, std::move(args), {}, 0.0, nullptr});
}

Var Tape::slice(Var a, int start, int len) {
    const Tensor& t = val(a);
    expect_vec(t, "slice");
    if (start < 0 || len <= 0 || start + len > t.shape[0]) throw ShapeMismatch("slice: bounds");
    Tensor out({len});
    std::copy_n(t.v.begin() + start, len, out.v.begin());
    return push(Node{Op::Slice, std::move(out), {}, {a.id}, {start, len}, 0.0, nullptr});
}

Var Tape::dot(Var a, Var b) {
    const Tensor& ta = val(a);
    const Tensor& tb = val(b);
    if (ta.shape != tb.shape) throw ShapeMismatch("dot: shape mismatch");
    double s = 0;
    for (size_t i = 0; i < ta.v.size(); ++i) s += ta.v[i] * tb.v[i];
    return push(Node{Op::Dot, Tensor({1}, {s}), {}, {a.id, b.id}, {}, 0.0, nullptr});
}

Var Tape::sum(Var a) {
    const Tensor& t = val(a);
    double s = 0;
    for (double x : t.v) s += x;
    return push(Node{Op::Sum, Tensor({1}, {s}), {}, {a.id}, {}, 0.0, nullptr});
}

Var Tape::softmax(Var a) {
    Tensor out = val(a);
    double mx = *std::max_element(out.v.begin(), out.v.end());
    double z = 0;
    for (double& x : out.v) {
        x = std::exp(x - mx);
        z += x;
    }
    for (double& x : out.v) x /= z;
    return push(Node{Op::Softmax, std::move(out), {}, {a.id}, {}, 0.0, nullptr});
}

Var Tape::log_softmax(Var a) {
    Tensor out = val(a);
    double mx = *std::max_element(out.v.begin(), out.v.end());
    double z = 0;
    for (double x : out.v) z += std::exp(x - mx);
    double lz = mx + std::log(z);
    for (double& x : out.v) x -= lz;
    return push(Node{Op::LogSoftmax, std::move(out), {}, {a.id}, {}, 0.0, nullptr});
}

Var Tape::pick(Var a, int index) {
    const Tensor& t = val(a);
    expect_vec(t, "pick");
    if (index < 0 || index >= t.shape[0]) throw ShapeMismatch("pick: index out of range");
    return push(Node{Op::Pick, Tensor({1}, {t.v[static_cast<size_t>(index)]}), {}, {a.id},
                     {index}, 0.0, nullptr});
}

Var Tape::gather(Var a, std::vector<int> indices) {
    const Tensor& t = val(a);
    expect_vec(t, "gather");
    Tensor out({static_cast<int>(indices.size())});
    for (size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || indices[i] >= t.shape[0])
            throw ShapeMismatch("gather: index out of range");
        out.v[i] = t.v[static_cast<size_t>(indices[i])];
    }
    return push(Node{Op::Gather, std::move(out), {}, {a.id}, std::move(indices), 0.0, nullptr});
}

Var Tape::weighted_sum(std::span<const Var> vecs, Var weights) {
    const Tensor& w = val(weights);
    expect_vec(w, "weighted_sum");
    if (static_cast<size_t>(w.shape[0]) != vecs.size())
        throw ShapeMismatch("weighted_sum: weight count != vector count");
    if (vecs.empty()) throw ShapeMismatch("weighted_sum: no vectors");
    Tensor out(val(vecs[0]).shape);
    std::vector<int> args{weights.id};
    for (size_t i = 0; i < vecs.size(); ++i) {
        const Tensor& t = val(vecs[i]);
        if (t.shape != out.shape) throw ShapeMismatch("weighted_sum: vector shapes differ");
        for (size_t j = 0; j < out.v.size(); ++j) out.v[j] += w.v[i] * t.v[j];
        args.push_back(vecs[i].id);
    }
    return push(Node{Op::WeightedSum, std::move(out), {}, std::move(args), {}, 0.0, nullptr});
}

void Tape::backward(Var root) {
    int r = check(root);
    if (nodes_[r].val.size() != 1) throw ShapeMismatch("backward: root must be scalar");
    // node grads are per-call scratch; only Parameter::grad accumulates
    for (Node& n : nodes_) {
        if (n.grad.v.size() != n.val.v.size())
            n.grad = Tensor(n.val.shape);
        else
            std::fill(n.grad.v.begin(), n.grad.v.end(), 0.0);
    }
    nodes_[r].grad.v[0] = 1.0;
    for (int i = r; i >= 0; --i) backprop_node(i);
    for (Node& n : nodes_) {
        if (n.op == Op::Param) {
            for (size_t k = 0; k < n.grad.v.size(); ++k) n.parameter->grad.v[k] += n.grad.v[k];
        } else if (n.op == Op::Lookup) {
            int row = n.iargs[0];
            int cols = n.parameter->value.shape[1];
            for (int k = 0; k < cols; ++k)
                n.parameter->grad.v[static_cast<size_t>(row) * cols + k] +=
                    n.grad.v[static_cast<size_t>(k)];
        }
    }
}

void Tape::backprop_node(int i) {
    Node& n = nodes_[i];
    const Tensor& g = n.grad;
    bool all_zero = true;
    for (double x : g.v)
        if (x != 0.0) {
            all_zero = false;
            break;
        }
    if (all_zero) return;

    auto arg = [&](int k) -> Node& { return nodes_[n.args[static_cast<size_t>(k)]]; };
    switch (n.op) {
        case Op::Constant:
        case Op::Param:
        case Op::Lookup:
            break;
        case Op::MatVec: {
            const Tensor& w = arg(0).val;
            const Tensor& x = arg(1).val;
            Tensor& gw = arg(0).grad;
            Tensor& gx = arg(1).grad;
            for (int r = 0; r < w.shape[0]; ++r) {
                double gr = g.v[static_cast<size_t>(r)];
                if (gr == 0) continue;
                for (int c = 0; c < w.shape[1]; ++c) {
                    gw.v[static_cast<size_t>(r) * w.shape[1] + c] += gr * x.v[static_cast<size_t>(c)];
                    gx.v[static_cast<size_t>(c)] += gr * w.v[static_cast<size_t>(r) * w.shape[1] + c];
                }
            }
            break;
        }
        case Op::MatVecT: {
            const Tensor& w = arg(0).val;
            const Tensor& x = arg(1).val;
            Tensor& gw = arg(0).grad;
            Tensor& gx = arg(1).grad;
            for (int r = 0; r < w.shape[0]; ++r)
                for (int c = 0; c < w.shape[1]; ++c) {
                    double gc = g.v[static_cast<size_t>(c)];
                    if (gc == 0) continue;
                    gw.v[static_cast<size_t>(r) * w.shape[1] + c] += gc * x.v[static_cast<size_t>(r)];
                    gx.v[static_cast<size_t>(r)] += gc * w.v[static_cast<size_t>(r) * w.shape[1] + c];
                }
            break;
        }
        case Op::Add:
            for (size_t k = 0; k < g.v.size(); ++k) {
                arg(0).grad.v[k] += g.v[k];
                arg(1).grad.v[k] += g.v[k];
            }
            break;
        case Op::AddMany:
            for (size_t a = 0; a < n.args.size(); ++a)
                for (size_t k = 0; k < g.v.size(); ++k) arg(static_cast<int>(a)).grad.v[k] += g.v[k];
            break;
        case Op::Scale:
            for (size_t k = 0; k < g.v.size(); ++k) arg(0).grad.v[k] += n.c * g.v[k];
            break;
        case Op::Mul:
            for (size_t k = 0; k < g.v.size(); ++k) {
                arg(0).grad.v[k] += g.v[k] * arg(1).val.v[k];
                arg(1).grad.v[k] += g.v[k] * arg(0).val.v[k];
            }
            break;
        case Op::Tanh:
            for (size_t k = 0; k < g.v.size(); ++k)
                arg(0).grad.v[k] += g.v[k] * (1.0 - n.val.v[k] * n.val.v[k]);
            break;
        case Op::Sigmoid:
            for (size_t k = 0; k < g.v.size(); ++k)
                arg(0).grad.v[k] += g.v[k] * n.val.v[k] * (1.0 - n.val.v[k]);
            break;
        case Op::Relu:
            for (size_t k = 0; k < g.v.size(); ++k)
                if (n.val.v[k] > 0) arg(0).grad.v[k] += g.v[k];
            break;
        case Op::Concat: {
            size_t off = 0;
            for (size_t a = 0; a < n.args.size(); ++a) {
                Tensor& ga = arg(static_cast<int>(a)).grad;
                for (size_t k = 0; k < ga.v.size(); ++k) ga.v[k] += g.v[off + k];
                off += ga.v.size();
            }
            break;
        }
        case Op::Slice: {
            int start = n.iargs[0];
            for (size_t k = 0; k < g.v.size(); ++k)
                arg(0).grad.v[static_cast<size_t>(start) + k] += g.v[k];
            break;
        }
        case Op::Dot: {
            double gs = g.v[0];
            for (size_t k = 0; k < arg(0).val.v.size(); ++k) {
                arg(0).grad.v[k] += gs * arg(1).val.v[k];
                arg(1).grad.v[k] += gs * arg(0).val.v[k];
            }
            break;
        }
        case Op::Sum: {
            double gs = g.v[0];
            for (double& x : arg(0).grad.v) x += gs;
            break;
        }
        case Op::Softmax: {
            double dotpg = 0;
            for (size_t k = 0; k < g.v.size(); ++k) dotpg += g.v[k] * n.val.v[k];
            for (size_t k = 0; k < g.v.size(); ++k)
                arg(0).grad.v[k] += n.val.v[k] * (g.v[k] - dotpg);
            break;
        }
        case Op::LogSoftmax: {
            double gsum = 0;
            for (double x : g.v) gsum += x;
            for (size_t k = 0; k < g.v.size(); ++k)
                arg(0).grad.v[k] += g.v[k] - std::exp(n.val.v[k]) * gsum;
            break;
        }
        case Op::Pick:
            arg(0).grad.v[static_cast<size_t>(n.iargs[0])] += g.v[0];
            break;
        case Op::Gather:
            for (size_t k = 0; k < n.iargs.size(); ++k)
                arg(0).grad.v[static_cast<size_t>(n.iargs[k])] += g.v[k];
            break;
        case Op::WeightedSum: {
            const Tensor& w = arg(0).val;
            for (size_t i = 0; i + 1 < n.args.size(); ++i) {
                Node& vec = nodes_[n.args[i + 1]];
                double dw = 0;
                for (size_t k = 0; k < g.v.size(); ++k) {
                    vec.grad.v[k] += w.v[i] * g.v[k];
                    dw += g.v[k] * vec.val.v[k];
                }
                arg(0).grad.v[i] += dw;
            }
            break;
        }
    }
}

void Tape::clear() { nodes_.clear(); }

// ---------------------------------------------------------------------------
// LSTM / Stack-LSTM

LstmCell LstmCell::create(ParamStore& ps, const std::string& prefix, int input_dim,
                          int hidden_dim, Rng& rng) {
    LstmCell c;
    c.input_dim = input_dim;
    c.hidden_dim = hidden_dim;
    c.wx = &ps.add(prefix + ".wx", {4 * hidden_dim, input_dim}, Init::Glorot, rng);
    c.wh = &ps.add(prefix + ".wh", {4 * hidden_dim, hidden_dim}, Init::Glorot, rng);
    c.b = &ps.add(prefix + ".b", {4 * hidden_dim}, Init::Zeros, rng);
    return c;
}

LstmCell LstmCell::attach(ParamStore& ps, const std::string& prefix, int input_dim,
                          int hidden_dim) {
    LstmCell c;
    c.input_dim = input_dim;
    c.hidden_dim = hidden_dim;
    c.wx = &ps.get(prefix + ".wx");
    c.wh = &ps.get(prefix + ".wh");
    c.b = &ps.get(prefix + ".b");
    return c;
}

LstmState lstm_step(Tape& t, const LstmCell& cell, const LstmState& prev, Var x) {
    const int H = cell.hidden_dim;
    Var gates = t.add(t.affine(t.param(*cell.wx), x, t.param(*cell.b)),
                      t.matvec(t.param(*cell.wh), prev.h));
    Var i = t.sigmoid(t.slice(gates, 0, H));
    Var f = t.sigmoid(t.slice(gates, H, H));
    Var g = t.tanh_(t.slice(gates, 2 * H, H));
    Var o = t.sigmoid(t.slice(gates, 3 * H, H));
    Var c = t.add(t.mul(f, prev.c), t.mul(i, g));
    Var h = t.mul(o, t.tanh_(c));
    return {h, c};
}

StackLstm::StackLstm(ParamStore& ps, const std::string& prefix, int input_dim, int hidden_dim,
                     Rng& rng) {
    cell_ = LstmCell::create(ps, prefix, input_dim, hidden_dim, rng);
    h0_ = &ps.add(prefix + ".h0", {hidden_dim}, Init::Uniform01, rng);
    c0_ = &ps.add(prefix + ".c0", {hidden_dim}, Init::Uniform01, rng);
}

StackLstm StackLstm::attach(ParamStore& ps, const std::string& prefix, int input_dim,
                            int hidden_dim) {
    StackLstm s;
    s.cell_ = LstmCell::attach(ps, prefix, input_dim, hidden_dim);
    s.h0_ = &ps.get(prefix + ".h0");
    s.c0_ = &ps.get(prefix + ".c0");
    return s;
}

void StackLstm::start(Tape& tape) {
    tape_ = &tape;
    states_.clear();
    states_.push_back({tape.param(*h0_), tape.param(*c0_)});
}

void StackLstm::push(Var x) {
    if (!tape_) throw std::runtime_error("StackLstm: start() not called");
    states_.push_back(lstm_step(*tape_, cell_, states_.back(), x));
}

void StackLstm::pop() {
    if (states_.size() <= 1) throw EmptyStack("StackLstm: pop on empty stack");
    states_.pop_back();
}

Var StackLstm::summary() const {
    if (states_.empty()) throw std::runtime_error("StackLstm: start() not called");
    return states_.back().h;
}

// ---------------------------------------------------------------------------

double gradient_check(ParamStore& ps, const std::function<Var(Tape&)>& f, double h) {
    ps.zero_grads();
    {
        Tape tape;
        Var loss = f(tape);
        tape.backward(loss);
    }
    std::map<std::string, Tensor> analytic;
    for (const auto& [name, p] : ps.raw()) analytic.emplace(name, p.grad);

    double worst = 0;
    for (auto& [name, p] : ps.raw()) {
        for (size_t i = 0; i < p.value.v.size(); ++i) {
            double keep = p.value.v[i];
            p.value.v[i] = keep + h;
            double up, down;
            {
                Tape tape;
                up = tape.val(f(tape)).v[0];
            }
            p.value.v[i] = keep - h;
            {
                Tape tape;
                down = tape.val(f(tape)).v[0];
            }
            p.value.v[i] = keep;
            double numeric = (up - down) / (2 * h);
            double a = analytic.at(name).v[i];
            double err = std::fabs(a - numeric) / std::max({1.0, std::fabs(a), std::fabs(numeric)});
            worst = std::max(worst, err);
        }
    }
    return worst;
}

}  // namespace amr

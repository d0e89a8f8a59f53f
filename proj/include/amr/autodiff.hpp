#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "amr/rng.hpp"

namespace amr {

struct ShapeMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyStack : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Tensor {
    std::vector<int> shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(std::vector<int> s) : shape(std::move(s)) {
        v.assign(count(shape), 0.0);
    }
    Tensor(std::vector<int> s, std::vector<double> vals) : shape(std::move(s)), v(std::move(vals)) {
        if (v.size() != count(shape)) throw ShapeMismatch("tensor value count != shape product");
    }
    static size_t count(const std::vector<int>& s) {
        size_t n = 1;
        for (int d : s) n *= static_cast<size_t>(d);
        return n;
    }
    size_t size() const { return v.size(); }
    int rows() const { return shape.empty() ? 0 : shape[0]; }
    int cols() const { return shape.size() > 1 ? shape[1] : 1; }
};

enum class Init { Zeros, Glorot, Uniform01 };

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
};

// Named trainable tensors plus the SGD state. Parameters are stored in a
// std::map so Parameter* stays valid across insertions.
class ParamStore {
public:
    Parameter& add(const std::string& name, std::vector<int> shape, Init init, Rng& rng);
    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    bool has(const std::string& name) const { return params_.count(name) > 0; }

    std::vector<std::string> names() const;
    size_t scalar_count() const;

    void zero_grads();
    double grad_norm() const;
    // SGD with global-norm clipping; lr decays per epoch outside
    void sgd_step(double lr, double clip = 5.0);

    // self-describing binary container, bit-exact round trip
    void save(const std::string& path, const std::string& config_snapshot = "") const;
    // returns the stored config snapshot
    std::string load(const std::string& path);

    std::map<std::string, Parameter>& raw() { return params_; }
    const std::map<std::string, Parameter>& raw() const { return params_; }

private:
    std::map<std::string, Parameter> params_;
};

// handle into a Tape
struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Reverse-mode expression tape. Build forward with the op methods, then call
// backward() on a scalar root; gradients accumulate into Parameter::grad.
class Tape {
public:
    Var constant(Tensor t);
    Var scalar(double x) { return constant(Tensor({1}, {x})); }
    Var param(Parameter& p);
    Var lookup(Parameter& table, int row);  // row of an embedding matrix

    Var matvec(Var W, Var x);    // W x
    Var matvec_t(Var W, Var x);  // W^T x
    Var affine(Var W, Var x, Var b);
    Var add(Var a, Var b);
    Var add_many(std::span<const Var> xs);
    Var sub(Var a, Var b);
    Var scale(Var a, double c);
    Var mul(Var a, Var b);  // elementwise
    Var tanh_(Var a);
    Var sigmoid(Var a);
    Var relu(Var a);
    Var concat(std::span<const Var> xs);
    Var slice(Var a, int start, int len);
    Var dot(Var a, Var b);
    Var sum(Var a);
    Var softmax(Var a);
    Var log_softmax(Var a);
    Var pick(Var a, int index);
    Var gather(Var a, std::vector<int> indices);
    // sum_i weights[i] * vecs[i]; weights is one vector of length |vecs|
    Var weighted_sum(std::span<const Var> vecs, Var weights);

    const Tensor& val(Var x) const { return nodes_[check(x)].val; }
    const Tensor& grad_of(Var x) const { return nodes_[check(x)].grad; }

    void backward(Var root);

    size_t node_count() const { return nodes_.size(); }
    void clear();

private:
    enum class Op {
        Constant, Param, Lookup, MatVec, MatVecT, Add, AddMany, Scale, Mul,
        Tanh, Sigmoid, Relu, Concat, Slice, Dot, Sum, Softmax, LogSoftmax, Pick, Gather,
        WeightedSum,
    };
    struct Node {
        Op op;
        Tensor val;
        Tensor grad;
        std::vector<int> args;
        std::vector<int> iargs;  // slice bounds, pick/gather indices, lookup row
        double c = 0.0;
        Parameter* parameter = nullptr;
    };
    std::vector<Node> nodes_;

    int check(Var x) const {
        if (x.id < 0 || x.id >= static_cast<int>(nodes_.size()))
            throw std::runtime_error("Var does not belong to this tape");
        return x.id;
    }
    Var push(Node n) {
        nodes_.push_back(std::move(n));
        return Var{static_cast<int>(nodes_.size()) - 1};
    }
    void backprop_node(int i);
    static void expect_vec(const Tensor& t, const char* what);
};

// LSTM cell weights living in a ParamStore under `prefix`.
struct LstmCell {
    Parameter* wx = nullptr;  // {4H, X}
    Parameter* wh = nullptr;  // {4H, H}
    Parameter* b = nullptr;   // {4H}
    int input_dim = 0, hidden_dim = 0;

    static LstmCell create(ParamStore& ps, const std::string& prefix, int input_dim,
                           int hidden_dim, Rng& rng);
    static LstmCell attach(ParamStore& ps, const std::string& prefix, int input_dim,
                           int hidden_dim);
};

struct LstmState {
    Var h, c;
};

LstmState lstm_step(Tape& t, const LstmCell& cell, const LstmState& prev, Var x);

// An LSTM whose sequence of states is a stack: push runs one cell step, pop
// restores the previous summary exactly. The empty-stack summary is a learned
// initial state.
class StackLstm {
public:
    StackLstm() = default;
    StackLstm(ParamStore& ps, const std::string& prefix, int input_dim, int hidden_dim, Rng& rng);
    static StackLstm attach(ParamStore& ps, const std::string& prefix, int input_dim,
                            int hidden_dim);

    void start(Tape& tape);  // reset to the learned initial state
    void push(Var x);
    void pop();
    Var summary() const;  // hidden state on top
    size_t depth() const { return states_.size() - 1; }

    int hidden_dim() const { return cell_.hidden_dim; }

private:
    LstmCell cell_;
    Parameter* h0_ = nullptr;
    Parameter* c0_ = nullptr;
    Tape* tape_ = nullptr;
    std::vector<LstmState> states_;
};

// Max relative error between analytic gradients and central finite
// differences over every parameter scalar. `f` rebuilds the loss on a fresh
// tape each call.
double gradient_check(ParamStore& ps, const std::function<Var(Tape&)>& f, double h = 1e-4);

}  // namespace amr

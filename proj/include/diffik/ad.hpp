#pragma once

// Reverse-mode automatic differentiation on an explicit tape.
//
// A Var is either a constant (no tape entry) or a handle to a node on a Tape.
// Every operation computes its value with the same double arithmetic a plain
// evaluation would use, so templated code instantiated with double and with
// Var produces identical primal values. Operations that involve only
// constants never touch the tape; multiplying by an exact constant 0 or 1 and
// adding an exact constant 0 are folded so rigid parts of a kinematic tree add
// no nodes.

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace diffik::ad {

class Tape;

class Var {
 public:
  Var() = default;
  Var(double value) : value_(value) {}  // NOLINT: implicit constant lift

  [[nodiscard]] double value() const { return value_; }
  [[nodiscard]] bool is_constant() const { return tape_ == nullptr; }
  [[nodiscard]] std::int32_t index() const { return index_; }
  [[nodiscard]] Tape* tape() const { return tape_; }

 private:
  friend class Tape;
  Var(double value, std::int32_t index, Tape* tape)
      : value_(value), index_(index), tape_(tape) {}

  double value_ = 0.0;
  std::int32_t index_ = -1;
  Tape* tape_ = nullptr;
};

class Tape {
 public:
  Tape() { nodes_.reserve(4096); }

  void clear() {
    nodes_.clear();
    num_inputs_ = 0;
  }

  // Inputs must be registered before any other node.
  Var input(double value) {
    nodes_.push_back({{-1, -1}, {0.0, 0.0}});
    ++num_inputs_;
    return Var(value, static_cast<std::int32_t>(nodes_.size() - 1), this);
  }

  Var unary(double value, const Var& a, double da) {
    nodes_.push_back({{a.index_, -1}, {da, 0.0}});
    return Var(value, static_cast<std::int32_t>(nodes_.size() - 1), this);
  }

  Var binary(double value, const Var& a, double da, const Var& b, double db) {
    nodes_.push_back({{a.index_, b.index_}, {da, db}});
    return Var(value, static_cast<std::int32_t>(nodes_.size() - 1), this);
  }

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] std::size_t num_inputs() const { return num_inputs_; }

  // Accumulates d(output)/d(input_i) into grad (which must hold num_inputs()).
  void gradient(const Var& output, std::span<double> grad) {
    for (double& g : grad) g = 0.0;
    if (output.is_constant()) return;
    adjoint_.assign(nodes_.size(), 0.0);
    adjoint_[output.index_] = 1.0;
    for (std::size_t i = nodes_.size(); i-- > num_inputs_;) {
      const double a = adjoint_[i];
      if (a == 0.0) continue;
      const Node& n = nodes_[i];
      if (n.parent[0] >= 0) adjoint_[n.parent[0]] += a * n.partial[0];
      if (n.parent[1] >= 0) adjoint_[n.parent[1]] += a * n.partial[1];
    }
    for (std::size_t i = 0; i < num_inputs_ && i < grad.size(); ++i) grad[i] = adjoint_[i];
  }

 private:
  struct Node {
    std::int32_t parent[2];
    double partial[2];
  };
  std::vector<Node> nodes_;
  std::vector<double> adjoint_;
  std::size_t num_inputs_ = 0;
};

inline double value_of(double x) { return x; }
inline double value_of(const Var& x) { return x.value(); }

// ---- arithmetic -----------------------------------------------------------

inline Var operator+(const Var& a, const Var& b) {
  const double v = a.value() + b.value();
  if (a.is_constant() && b.is_constant()) return Var(v);
  if (a.is_constant()) {
    if (a.value() == 0.0) return b;
    return b.tape()->unary(v, b, 1.0);
  }
  if (b.is_constant()) {
    if (b.value() == 0.0) return a;
    return a.tape()->unary(v, a, 1.0);
  }
  return a.tape()->binary(v, a, 1.0, b, 1.0);
}

inline Var operator-(const Var& a, const Var& b) {
  const double v = a.value() - b.value();
  if (a.is_constant() && b.is_constant()) return Var(v);
  if (a.is_constant()) return b.tape()->unary(v, b, -1.0);
  if (b.is_constant()) {
    if (b.value() == 0.0) return a;
    return a.tape()->unary(v, a, 1.0);
  }
  return a.tape()->binary(v, a, 1.0, b, -1.0);
}

inline Var operator-(const Var& a) {
  if (a.is_constant()) return Var(-a.value());
  return a.tape()->unary(-a.value(), a, -1.0);
}

inline Var operator*(const Var& a, const Var& b) {
  const double v = a.value() * b.value();
  if (a.is_constant() && b.is_constant()) return Var(v);
  if (a.is_constant()) {
    if (a.value() == 0.0) return Var(v);
    if (a.value() == 1.0) return b;
    return b.tape()->unary(v, b, a.value());
  }
  if (b.is_constant()) {
    if (b.value() == 0.0) return Var(v);
    if (b.value() == 1.0) return a;
    return a.tape()->unary(v, a, b.value());
  }
  return a.tape()->binary(v, a, b.value(), b, a.value());
}

inline Var operator/(const Var& a, const Var& b) {
  const double v = a.value() / b.value();
  if (a.is_constant() && b.is_constant()) return Var(v);
  const double inv = 1.0 / b.value();
  if (b.is_constant()) return a.tape()->unary(v, a, inv);
  if (a.is_constant()) return b.tape()->unary(v, b, -v * inv);
  return a.tape()->binary(v, a, inv, b, -v * inv);
}

inline Var& operator+=(Var& a, const Var& b) { return a = a + b; }
inline Var& operator-=(Var& a, const Var& b) { return a = a - b; }
inline Var& operator*=(Var& a, const Var& b) { return a = a * b; }

inline bool operator<(const Var& a, const Var& b) { return a.value() < b.value(); }
inline bool operator>(const Var& a, const Var& b) { return a.value() > b.value(); }
inline bool operator<=(const Var& a, const Var& b) { return a.value() <= b.value(); }
inline bool operator>=(const Var& a, const Var& b) { return a.value() >= b.value(); }

// ---- elementary functions -------------------------------------------------

inline Var sin(const Var& a) {
  const double v = std::sin(a.value());
  if (a.is_constant()) return Var(v);
  return a.tape()->unary(v, a, std::cos(a.value()));
}

inline Var cos(const Var& a) {
  const double v = std::cos(a.value());
  if (a.is_constant()) return Var(v);
  return a.tape()->unary(v, a, -std::sin(a.value()));
}

inline Var sqrt(const Var& a) {
  const double v = std::sqrt(a.value());
  if (a.is_constant()) return Var(v);
  return a.tape()->unary(v, a, 0.5 / v);
}

inline Var acos(const Var& a) {
  const double v = std::acos(a.value());
  if (a.is_constant()) return Var(v);
  return a.tape()->unary(v, a, -1.0 / std::sqrt(1.0 - a.value() * a.value()));
}

inline bool isfinite(const Var& a) { return std::isfinite(a.value()); }

}  // namespace diffik::ad

namespace diffik {

// Clamp that works for double and Var alike; outside the interval the result
// is the constant bound, so the derivative there is zero.
template <class S>
S clamp_value(const S& x, double lo, double hi) {
  if (x < S(lo)) return S(lo);
  if (x > S(hi)) return S(hi);
  return x;
}

}  // namespace diffik

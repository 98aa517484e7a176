#include "boltzgen/enumerate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "boltzgen/errors.hpp"

namespace boltzgen {
namespace {

struct Node {
  const ClassExpr* e = nullptr;
  int child0 = -1, child1 = -1;
  std::vector<BigInt> c;    // coefficients c_0..c_N
  std::vector<BigInt> aux;  // Cycle: labelled Seq(arg) counts; MSet: divisor sums b_k
};

struct Engine {
  const Spec& spec;
  std::size_t N;
  bool labelled;
  std::vector<Node> nodes;
  std::vector<int> body_of;                      // def index -> node index
  std::map<std::string, int> class_index;
  std::vector<std::vector<BigInt>> class_c;      // per def
  std::vector<std::vector<std::size_t>> divisors;  // divisors of 1..N
  std::vector<BigInt> binom_n, binom_nm1;        // rows C(n, .) and C(n-1, .)

  Engine(const Spec& s, std::size_t n) : spec(s), N(n) {
    labelled = s.mode == Mode::Labelled;
    for (std::size_t i = 0; i < s.defs.size(); ++i) class_index[s.defs[i].name] = (int)i;
    for (const auto& d : s.defs) body_of.push_back(flatten(d.body));
    class_c.assign(s.defs.size(), std::vector<BigInt>(N + 1));
    divisors.assign(N + 1, {});
    for (std::size_t d = 1; d <= N; ++d)
      for (std::size_t m = d; m <= N; m += d) divisors[m].push_back(d);
  }

  int flatten(const ClassExpr& e) {
    int c0 = -1, c1 = -1;
    if (!e.children.empty()) c0 = flatten(e.children[0]);
    if (e.children.size() > 1) c1 = flatten(e.children[1]);
    Node node;
    node.e = &e;
    node.child0 = c0;
    node.child1 = c1;
    node.c.assign(N + 1, BigInt(0));
    if (e.kind == ExprKind::Cycle || e.kind == ExprKind::MSet)
      node.aux.assign(N + 1, BigInt(0));
    nodes.push_back(std::move(node));
    return (int)nodes.size() - 1;
  }

  // One candidate value of node coefficient at size n, given finalized
  // coefficients below n and current estimates at n.
  BigInt node_coeff(Node& node, std::size_t n) {
    const ClassExpr& e = *node.e;
    switch (e.kind) {
      case ExprKind::Empty:
        return BigInt(n == 0 ? 1 : 0);
      case ExprKind::Atom:
        return BigInt(n == 1 ? 1 : 0);
      case ExprKind::Ref: {
        auto it = class_index.find(e.name);
        if (it == class_index.end()) throw NameError("unresolved class reference: " + e.name);
        return class_c[it->second][n];
      }
      case ExprKind::Union:
        return nodes[node.child0].c[n] + nodes[node.child1].c[n];
      case ExprKind::Product: {
        const auto& a = nodes[node.child0].c;
        const auto& b = nodes[node.child1].c;
        BigInt s = 0;
        for (std::size_t j = 0; j <= n; ++j) {
          if (a[j] == 0 || b[n - j] == 0) continue;
          if (labelled)
            s += binom_n[j] * a[j] * b[n - j];
          else
            s += a[j] * b[n - j];
        }
        return s;
      }
      case ExprKind::Seq: {
        const auto& a = nodes[node.child0].c;
        BigInt s = n == 0 ? 1 : 0;
        for (std::size_t j = 1; j <= n; ++j) {
          if (a[j] == 0 || node.c[n - j] == 0) continue;
          if (labelled)
            s += binom_n[j] * a[j] * node.c[n - j];
          else
            s += a[j] * node.c[n - j];
        }
        return s;
      }
      case ExprKind::Set: {
        // From C' = A'C: c_n = [n=0] + sum binom(n-1,k-1) a_k c_{n-k}.
        const auto& a = nodes[node.child0].c;
        if (n == 0) return BigInt(1);
        BigInt s = 0;
        for (std::size_t k = 1; k <= n; ++k) {
          if (a[k] == 0 || node.c[n - k] == 0) continue;
          s += binom_nm1[k - 1] * a[k] * node.c[n - k];
        }
        return s;
      }
      case ExprKind::Cycle: {
        // aux = labelled Seq(arg); c_n from C' = A' Seq(A).
        const auto& a = nodes[node.child0].c;
        if (n == 0) return BigInt(0);
        BigInt s = 0;
        for (std::size_t j = 0; j + 1 <= n; ++j) {
          if (a[j + 1] == 0 || node.aux[n - 1 - j] == 0) continue;
          s += binom_nm1[j] * a[j + 1] * node.aux[n - 1 - j];
        }
        return s;
      }
      case ExprKind::MSet: {
        // Euler transform: n c_n = sum_{k=1..n} b_k c_{n-k}, b_k = sum_{d|k} d a_d.
        if (n == 0) return BigInt(1);
        BigInt s = 0;
        for (std::size_t k = 1; k <= n; ++k) {
          if (node.aux[k] == 0 || node.c[n - k] == 0) continue;
          s += node.aux[k] * node.c[n - k];
        }
        BigInt q = s / n;
        if (q * n != s) return node.c[n];  // inputs not yet stabilized this sweep
        return q;
      }
    }
    throw InternalError("unhandled expression kind");
  }

  void run() {
    binom_nm1.assign(1, BigInt(1));
    for (std::size_t n = 0; n <= N; ++n) {
      // Pascal rows C(n, .) and C(n-1, .).
      if (n == 0) {
        binom_n.assign(1, BigInt(1));
      } else {
        binom_nm1 = binom_n;
        std::vector<BigInt> row(n + 1, BigInt(1));
        for (std::size_t k = 1; k < n; ++k) row[k] = binom_nm1[k - 1] + binom_nm1[k];
        binom_n = std::move(row);
      }
      std::size_t sweep_cap = nodes.size() + spec.defs.size() + 2;
      bool stable = false;
      for (std::size_t sweep = 0; sweep < sweep_cap; ++sweep) {
        bool changed = false;
        for (std::size_t d = 0; d < spec.defs.size(); ++d) {
          // Nodes are stored in postorder, children before parents.
          int body = body_of[d];
          for (int ni = body_node_begin(d); ni <= body; ++ni) {
            Node& node = nodes[ni];
            if (node.e->kind == ExprKind::Cycle) {
              // Labelled Seq(arg) recurrence for the auxiliary array.
              const auto& a = nodes[node.child0].c;
              BigInt s = n == 0 ? 1 : 0;
              for (std::size_t j = 1; j <= n; ++j) {
                if (a[j] == 0 || node.aux[n - j] == 0) continue;
                s += binom_n[j] * a[j] * node.aux[n - j];
              }
              if (s != node.aux[n]) {
                node.aux[n] = s;
                changed = true;
              }
            } else if (node.e->kind == ExprKind::MSet) {
              const auto& a = nodes[node.child0].c;
              if (n >= 1) {
                BigInt b = 0;
                for (std::size_t dd : divisors[n])
                  if (a[dd] != 0) b += BigInt(dd) * a[dd];
                if (b != node.aux[n]) {
                  node.aux[n] = b;
                  changed = true;
                }
              }
            }
            BigInt v = node_coeff(node, n);
            if (v != node.c[n]) {
              node.c[n] = v;
              changed = true;
            }
          }
          const ClassDef& def = spec.defs[d];
          BigInt cv;
          if (def.differential) {
            cv = n == 0 ? BigInt(def.initial_count) : nodes[body].c[n - 1];
          } else {
            cv = nodes[body].c[n];
          }
          if (cv != class_c[d][n]) {
            class_c[d][n] = cv;
            changed = true;
          }
        }
        if (!changed) {
          stable = true;
          break;
        }
      }
      if (!stable)
        throw InternalError("coefficient recursion failed to stabilize at size " +
                            std::to_string(n));
    }
  }

  int body_node_begin(std::size_t d) const {
    return d == 0 ? 0 : body_of[d - 1] + 1;
  }
};

}  // namespace

double big_ln(const BigInt& v) {
  if (v == 0) return -std::numeric_limits<double>::infinity();
  using boost::multiprecision::msb;
  unsigned bits = msb(v);
  if (bits <= 900) return std::log(v.convert_to<double>());
  unsigned shift = bits - 52;
  BigInt top = v >> shift;
  return std::log(top.convert_to<double>()) + shift * 0.6931471805599453;
}

CountTable count_upto(const Spec& spec, std::size_t n, std::size_t cap) {
  if (n > cap)
    throw ParameterError("count_upto limit " + std::to_string(n) +
                         " exceeds the cap " + std::to_string(cap));
  Engine engine(spec, n);
  engine.run();
  CountTable table;
  table.upto = n;
  for (std::size_t d = 0; d < spec.defs.size(); ++d)
    table.counts[spec.defs[d].name] = std::move(engine.class_c[d]);
  return table;
}

std::vector<double> size_pmf(const Spec& spec, const std::string& cls, double x,
                             std::size_t n, const EvalOptions& options) {
  GfOracle oracle(spec, cls, options);
  OracleTable t = oracle.eval(x);
  if (t.status != OracleStatus::Converged)
    throw ParameterError("oracle does not converge at x = " + std::to_string(x));
  double cx = t.values.at(cls);
  CountTable counts = count_upto(spec, n);
  auto it = counts.counts.find(cls);
  if (it == counts.counts.end()) throw NameError("unknown class: " + cls);
  bool labelled = spec.mode == Mode::Labelled;
  std::vector<double> pmf(n + 1, 0.0);
  double lx = std::log(x), lcx = std::log(cx);
  for (std::size_t k = 0; k <= n; ++k) {
    const BigInt& c = it->second[k];
    if (c == 0) continue;
    double lp = big_ln(c) + k * lx - lcx;
    if (labelled) lp -= std::lgamma(static_cast<double>(k) + 1.0);
    pmf[k] = std::exp(lp);
  }
  return pmf;
}

}  // namespace boltzgen

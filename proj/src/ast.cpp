#include "boltzgen/ast.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "boltzgen/errors.hpp"

namespace boltzgen {
namespace {

Count sat_add(Count a, Count b, Count cap) {
  if (a == kInfiniteCount || b == kInfiniteCount) return kInfiniteCount;
  Count s = a + b;
  if (s < a || s > cap) return kInfiniteCount;
  return s;
}

// Product rule for size-0 counting: an empty factor annihilates even an
// infinite one (no structure can be formed at all).
Count sat_mul(Count a, Count b, Count cap) {
  if (a == 0 || b == 0) return 0;
  if (a == kInfiniteCount || b == kInfiniteCount) return kInfiniteCount;
  if (a > cap / b) return kInfiniteCount;
  Count p = a * b;
  if (p > cap) return kInfiniteCount;
  return p;
}

Count min_plus_add(Count a, Count b) {
  if (a == kInfiniteCount || b == kInfiniteCount) return kInfiniteCount;
  Count s = a + b;
  return s < a ? kInfiniteCount : s;
}

Count zero_count_expr(const ClassExpr& e, const Spec& spec,
                      const std::map<std::string, Count>& cur, Count cap) {
  switch (e.kind) {
    case ExprKind::Empty:
      return 1;
    case ExprKind::Atom:
      return 0;
    case ExprKind::Ref: {
      auto it = cur.find(e.name);
      if (it == cur.end()) throw NameError("unresolved class reference: " + e.name);
      return it->second;
    }
    case ExprKind::Union:
      return sat_add(zero_count_expr(e.children[0], spec, cur, cap),
                     zero_count_expr(e.children[1], spec, cur, cap), cap);
    case ExprKind::Product:
      return sat_mul(zero_count_expr(e.children[0], spec, cur, cap),
                     zero_count_expr(e.children[1], spec, cur, cap), cap);
    case ExprKind::Seq:
    case ExprKind::Set:
    case ExprKind::MSet:
      // Epsilon-free argument: exactly the empty sequence/set. Otherwise the
      // construction admits unboundedly many size-0 structures.
      return zero_count_expr(e.children[0], spec, cur, cap) == 0 ? 1
                                                                 : kInfiniteCount;
    case ExprKind::Cycle:
      return 0;
  }
  return 0;
}

Count min_size_expr(const ClassExpr& e, const Spec& spec,
                    const std::map<std::string, Count>& cur) {
  switch (e.kind) {
    case ExprKind::Empty:
      return 0;
    case ExprKind::Atom:
      return 1;
    case ExprKind::Ref: {
      auto it = cur.find(e.name);
      if (it == cur.end()) throw NameError("unresolved class reference: " + e.name);
      return it->second;
    }
    case ExprKind::Union:
      return std::min(min_size_expr(e.children[0], spec, cur),
                      min_size_expr(e.children[1], spec, cur));
    case ExprKind::Product:
      return min_plus_add(min_size_expr(e.children[0], spec, cur),
                          min_size_expr(e.children[1], spec, cur));
    case ExprKind::Seq:
    case ExprKind::Set:
    case ExprKind::MSet:
      return 0;
    case ExprKind::Cycle:
      return min_size_expr(e.children[0], spec, cur);
  }
  return 0;
}

void walk(const ClassExpr& e, const std::function<void(const ClassExpr&)>& fn) {
  fn(e);
  for (const auto& c : e.children) walk(c, fn);
}

bool names_resolve(const Spec& spec,
                   std::vector<std::pair<std::string, std::string>>* diags) {
  bool ok = true;
  std::set<std::string> seen;
  for (const auto& def : spec.defs) {
    if (!seen.insert(def.name).second) {
      ok = false;
      if (diags) diags->emplace_back(def.name, "duplicate class definition");
    }
  }
  for (const auto& def : spec.defs) {
    walk(def.body, [&](const ClassExpr& e) {
      if (e.kind == ExprKind::Ref && !seen.count(e.name)) {
        ok = false;
        if (diags)
          diags->emplace_back(def.name, "unresolved reference to " + e.name);
      }
    });
  }
  return ok;
}

}  // namespace

const ClassDef* Spec::find(const std::string& name) const {
  for (const auto& d : defs)
    if (d.name == name) return &d;
  return nullptr;
}

double Spec::atom_weight(const std::string& type) const {
  auto it = atom_weights.find(type);
  return it == atom_weights.end() ? 1.0 : it->second;
}

void Spec::set_atom_weight(const std::string& type, double w) {
  atom_weights[type] = w;
}

std::map<std::string, Count> zero_size_counts(const Spec& spec, Count cap) {
  if (!names_resolve(spec, nullptr)) {
    // Reproduce the first failure as an exception with its class name.
    std::vector<std::pair<std::string, std::string>> diags;
    names_resolve(spec, &diags);
    throw NameError(diags.front().second + " (in " + diags.front().first + ")");
  }
  // Downward Kleene iteration from "potentially infinite": circular size-0
  // definitions (B = 1 * B) stay infinite, well-founded systems settle on
  // their true counts. A differential class has exactly initial_count
  // structures of size 0.
  std::map<std::string, Count> cur;
  for (const auto& def : spec.defs)
    cur[def.name] = def.differential ? def.initial_count : kInfiniteCount;
  std::size_t round_cap = spec.defs.size() + 1;
  for (std::size_t round = 0; round <= round_cap; ++round) {
    bool changed = false;
    for (const auto& def : spec.defs) {
      if (def.differential) continue;
      Count next = zero_count_expr(def.body, spec, cur, cap);
      if (next != cur[def.name]) {
        cur[def.name] = next;
        changed = true;
      }
    }
    if (!changed) return cur;
  }
  // Failed to stabilize: whatever is still moving is declared infinite.
  for (const auto& def : spec.defs)
    if (!def.differential) cur[def.name] = kInfiniteCount;
  return cur;
}

std::map<std::string, Count> min_sizes(const Spec& spec) {
  if (!names_resolve(spec, nullptr)) {
    std::vector<std::pair<std::string, std::string>> diags;
    names_resolve(spec, &diags);
    throw NameError(diags.front().second + " (in " + diags.front().first + ")");
  }
  std::map<std::string, Count> cur;
  for (const auto& def : spec.defs) cur[def.name] = kInfiniteCount;
  // Bellman-Ford style relaxation over the (min, +) semiring.
  for (std::size_t round = 0; round <= spec.defs.size() + 1; ++round) {
    bool changed = false;
    for (const auto& def : spec.defs) {
      Count next;
      if (def.differential) {
        next = def.initial_count > 0
                   ? 0
                   : min_plus_add(1, min_size_expr(def.body, spec, cur));
      } else {
        next = min_size_expr(def.body, spec, cur);
      }
      if (next != cur[def.name]) {
        cur[def.name] = next;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return cur;
}

ValidationReport validate_spec(const Spec& spec) {
  ValidationReport report;
  if (spec.defs.empty()) {
    report.diagnostics.emplace_back("", "specification defines no classes");
    return report;
  }
  if (!names_resolve(spec, &report.diagnostics)) return report;

  report.zero_counts = zero_size_counts(spec);
  report.min_sizes = min_sizes(spec);

  bool ok = true;
  for (const auto& def : spec.defs) {
    if (def.differential && spec.mode != Mode::Labelled) {
      ok = false;
      report.diagnostics.emplace_back(
          def.name, "differential definitions require labelled mode");
    }
    walk(def.body, [&](const ClassExpr& e) {
      if ((e.kind == ExprKind::Cycle || e.kind == ExprKind::Set) &&
          spec.mode != Mode::Labelled) {
        ok = false;
        report.diagnostics.emplace_back(
            def.name, std::string(e.kind == ExprKind::Cycle ? "Cycle" : "Set") +
                          " requires labelled mode");
      }
      if (e.kind == ExprKind::MSet && spec.mode != Mode::Unlabelled) {
        ok = false;
        report.diagnostics.emplace_back(def.name,
                                        "MSet requires unlabelled mode");
      }
      switch (e.kind) {
        case ExprKind::Seq:
        case ExprKind::Cycle:
        case ExprKind::Set:
        case ExprKind::MSet: {
          Count z = zero_count_expr(e.children[0], spec, report.zero_counts,
                                    Count{1} << 32);
          if (z != 0) {
            ok = false;
            static const char* names[] = {"Seq", "Cycle", "Set", "MSet"};
            int i = static_cast<int>(e.kind) - static_cast<int>(ExprKind::Seq);
            report.diagnostics.emplace_back(
                def.name,
                std::string(names[i]) + " argument admits size-0 structures");
          }
          break;
        }
        default:
          break;
      }
    });
  }
  for (const auto& [name, z] : report.zero_counts) {
    if (z == kInfiniteCount) {
      ok = false;
      report.diagnostics.emplace_back(name,
                                      "infinitely many size-0 structures");
    }
  }
  for (const auto& [name, m] : report.min_sizes) {
    if (m == kInfiniteCount) {
      ok = false;
      report.diagnostics.emplace_back(name, "class admits no finite structure");
    }
  }
  report.ok = ok;
  return report;
}

}  // namespace boltzgen

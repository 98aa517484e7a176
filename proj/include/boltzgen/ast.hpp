#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace boltzgen {

enum class Mode { Unlabelled, Labelled };

enum class ExprKind { Empty, Atom, Ref, Union, Product, Seq, Cycle, Set, MSet };

/// One node of a class-definition expression. Union/Product carry two
/// children, the repetition constructions one; `name` holds the atom type
/// for Atom nodes ("Z" for the plain atom) and the class name for Ref nodes.
struct ClassExpr {
  ExprKind kind = ExprKind::Empty;
  std::string name;
  std::vector<ClassExpr> children;

  static ClassExpr empty() { return {}; }
  static ClassExpr atom(std::string type = "Z") {
    return {ExprKind::Atom, std::move(type), {}};
  }
  static ClassExpr ref(std::string class_name) {
    return {ExprKind::Ref, std::move(class_name), {}};
  }
  static ClassExpr join(ExprKind kind, ClassExpr left, ClassExpr right) {
    ClassExpr e{kind, {}, {}};
    e.children.push_back(std::move(left));
    e.children.push_back(std::move(right));
    return e;
  }
  static ClassExpr wrap(ExprKind kind, ClassExpr arg) {
    ClassExpr e{kind, {}, {}};
    e.children.push_back(std::move(arg));
    return e;
  }
};

/// A named class equation. A differential definition `A' = rhs; A(0) = a0;`
/// defines A through the initial-value relation whose derivative class is
/// the right-hand side; `initial_count` is the number of size-0 structures.
struct ClassDef {
  std::string name;
  ClassExpr body;
  bool differential = false;
  std::uint64_t initial_count = 0;
};

/// A full specification: mode, ordered definitions, and the known atom
/// types with their weights (weight 1 unless configured otherwise; weights
/// scale the per-atom generating-function factor, not the structures).
struct Spec {
  Mode mode = Mode::Unlabelled;
  std::vector<ClassDef> defs;
  std::map<std::string, double> atom_weights;

  const ClassDef* find(const std::string& name) const;
  /// Weight of an atom type (1.0 when never configured).
  double atom_weight(const std::string& type) const;
  void set_atom_weight(const std::string& type, double w);
};

/// Natural numbers extended with infinity, used by the size analyses.
using Count = std::uint64_t;
inline constexpr Count kInfiniteCount = ~Count{0};

struct ValidationReport {
  bool ok = false;
  std::map<std::string, Count> zero_counts;
  std::map<std::string, Count> min_sizes;
  std::vector<std::pair<std::string, std::string>> diagnostics;  // (class, reason)
};

/// Number of size-0 structures per class, kInfiniteCount when the class is
/// circular at size 0 (e.g. B = 1 * B) or the count exceeds the cap.
/// Throws NameError on unresolved references.
std::map<std::string, Count> zero_size_counts(const Spec& spec,
                                              Count cap = Count{1} << 32);

/// Smallest structure size per class, kInfiniteCount when no finite
/// structure exists. Throws NameError on unresolved references.
std::map<std::string, Count> min_sizes(const Spec& spec);

/// Static well-foundedness check: finite zero-counts, finite minimum sizes,
/// mode discipline (Cycle/Set/differential labelled-only, MSet
/// unlabelled-only) and epsilon-freeness of every Seq/Cycle/Set/MSet
/// argument. Violations are reported as data, never thrown.
ValidationReport validate_spec(const Spec& spec);

}  // namespace boltzgen

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace boltzgen {

enum class NodeKind { Empty, Atom, Pair, List, Class };
enum class ListCtor { Seq, Cycle, Set, MSet };

/// A generated combinatorial structure: a finite tree of construction nodes.
/// size() counts atoms. Labels, when assigned, are a permutation of 1..size.
struct Structure {
  NodeKind kind = NodeKind::Empty;
  std::string name;           // class name (Class) or atom type (Atom)
  std::uint64_t label = 0;    // 0 = unlabelled
  std::uint32_t variant = 0;  // which of the a0 size-0 objects (Empty only)
  ListCtor ctor = ListCtor::Seq;
  std::vector<Structure> items;  // Pair: 2, Class: 1, List: any

  std::size_t size() const;

  static Structure empty(std::uint32_t variant = 0);
  static Structure atom(std::string type);
  static Structure pair(Structure left, Structure right);
  static Structure list(ListCtor ctor, std::vector<Structure> items);
  static Structure cls(std::string name, Structure inner);
};

/// Term text, e.g. P(Z,Seq[P(Z,Seq[])]); labels print as Z@3 when requested.
std::string to_term(const Structure& s, bool with_labels = false);

/// Term text with symmetric constructions canonicalized: Set/MSet items
/// sorted, Cycle rotated to its least representative. Stable bucketing key
/// for uniformity tests.
std::string to_canonical_term(const Structure& s, bool with_labels = false);

/// One-line JSON; class wrappers annotate the wrapped node.
std::string to_json(const Structure& s, bool with_class = true);

}  // namespace boltzgen

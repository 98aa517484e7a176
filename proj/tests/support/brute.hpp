#pragma once

// Exhaustive structure generation, the independent counting oracle: builds
// every structure of a class at a given size by direct recursion over the
// construction grammar, with no shared code path into the library's
// coefficient DP or samplers (only the Structure container is reused).

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "boltzgen/ast.hpp"
#include "boltzgen/structure.hpp"

namespace brute {

using boltzgen::ClassExpr;
using boltzgen::ExprKind;
using boltzgen::ListCtor;
using boltzgen::Mode;
using boltzgen::Spec;
using boltzgen::Structure;

struct Item {
  Structure s;
  std::string key;  // canonical serialization decorated with union-branch tags
};

class Enumerator {
 public:
  explicit Enumerator(const Spec& spec) : spec_(spec), labelled_(spec.mode == Mode::Labelled) {}

  // All structures of the class at exactly size n (labels 1..n in labelled mode).
  std::vector<Item> of_class(const std::string& cls, std::size_t n) {
    auto memo = memo_.find({cls, n});
    if (memo != memo_.end()) return memo->second;
    if (depth_ > 64) throw std::runtime_error("brute-force recursion too deep");
    ++depth_;
    const auto* def = spec_.find(cls);
    if (!def) throw std::runtime_error("unknown class " + cls);
    std::vector<Item> out;
    if (def->differential) {
      if (n == 0) {
        for (std::uint32_t v = 0; v < def->initial_count; ++v) {
          Item it;
          it.s = Structure::cls(cls, Structure::empty(def->initial_count > 1 ? v + 1 : 0));
          it.key = cls + "#0v" + std::to_string(v);
          out.push_back(std::move(it));
        }
      } else {
        // Size-n structures are (max-labelled atom, rhs structure of size n-1).
        for (auto& inner : of_expr(def->body, n - 1)) {
          Structure a = Structure::atom("Z");
          if (labelled_) a.label = n;
          Item it;
          it.s = Structure::cls(cls, Structure::pair(std::move(a), inner.s));
          it.key = cls + "'(" + inner.key + ")";
          out.push_back(std::move(it));
        }
      }
    } else {
      for (auto& inner : of_expr(def->body, n)) {
        Item it;
        it.key = cls + "(" + inner.key + ")";
        it.s = Structure::cls(cls, std::move(inner.s));
        out.push_back(std::move(it));
      }
    }
    dedupe(out);
    --depth_;
    memo_[{cls, n}] = out;
    return out;
  }

  // Distinct-structure count (the oracle value).
  std::size_t count(const std::string& cls, std::size_t n) {
    return of_class(cls, n).size();
  }

  // Relabel a structure through a sorted label set, preserving label order:
  // the atom carrying local label v receives the v-th smallest new label.
  static Structure relabel(const Structure& s, const std::vector<std::uint64_t>& labels) {
    return relabel_rec(s, labels);
  }

 private:
  std::vector<Item> of_expr(const ClassExpr& e, std::size_t n) {
    std::vector<Item> out;
    switch (e.kind) {
      case ExprKind::Empty:
        if (n == 0) out.push_back({Structure::empty(), "1"});
        break;
      case ExprKind::Atom:
        if (n == 1) {
          Structure a = Structure::atom(e.name);
          if (labelled_) a.label = 1;
          out.push_back({std::move(a), "Z_" + e.name});
        }
        break;
      case ExprKind::Ref:
        return of_class(e.name, n);
      case ExprKind::Union: {
        for (auto& it : of_expr(e.children[0], n))
          out.push_back({std::move(it.s), "L:" + it.key});
        for (auto& it : of_expr(e.children[1], n))
          out.push_back({std::move(it.s), "R:" + it.key});
        break;
      }
      case ExprKind::Product: {
        for (std::size_t j = 0; j <= n; ++j) {
          auto lefts = of_expr(e.children[0], j);
          if (lefts.empty()) continue;
          auto rights = of_expr(e.children[1], n - j);
          if (rights.empty()) continue;
          for (auto& l : lefts)
            for (auto& r : rights) {
              if (labelled_) {
                for (auto& split : label_splits(n, j)) {
                  Item it;
                  it.s = Structure::pair(relabel(l.s, split.first), relabel(r.s, split.second));
                  it.key = "(" + l.key + tag(split.first) + "," + r.key + ")";
                  out.push_back(std::move(it));
                }
              } else {
                out.push_back({Structure::pair(clone(l.s), clone(r.s)),
                               "(" + l.key + "," + r.key + ")"});
              }
            }
        }
        break;
      }
      case ExprKind::Seq:
      case ExprKind::Cycle:
      case ExprKind::Set:
      case ExprKind::MSet: {
        ListCtor ctor = e.kind == ExprKind::Seq     ? ListCtor::Seq
                        : e.kind == ExprKind::Cycle ? ListCtor::Cycle
                        : e.kind == ExprKind::Set   ? ListCtor::Set
                                                    : ListCtor::MSet;
        bool nonempty = e.kind == ExprKind::Cycle;
        if (n == 0 && !nonempty)
          out.push_back({Structure::list(ctor, {}), ctor_key(ctor) + "[]"});
        // Ordered tuples of components (sizes >= 1); symmetric constructions
        // collapse through canonical keys in dedupe below.
        if (n > 0) {
          if (labelled_)
            tuples_lab(e.children[0], ctor, n, {}, {}, out);
          else
            tuples(e.children[0], ctor, n, {}, {}, out);
        }
        break;
      }
    }
    dedupe(out);
    return out;
  }

  void tuples(const ClassExpr& arg, ListCtor ctor, std::size_t remaining,
              std::vector<Structure> acc, std::vector<std::string> keys,
              std::vector<Item>& out) {
    if (remaining == 0) {
      if (acc.empty()) return;
      Structure s = Structure::list(ctor, acc);
      std::vector<std::string> k = keys;
      if (ctor == ListCtor::Set || ctor == ListCtor::MSet) {
        std::sort(k.begin(), k.end());
      } else if (ctor == ListCtor::Cycle && k.size() > 1) {
        std::vector<std::string> best = k;
        for (std::size_t r = 1; r < k.size(); ++r) {
          std::rotate(k.begin(), k.begin() + 1, k.end());
          if (k < best) best = k;
        }
        k = best;
      }
      std::string key = ctor_key(ctor) + "[";
      for (std::size_t i = 0; i < k.size(); ++i) key += (i ? "," : "") + k[i];
      key += "]";
      out.push_back({std::move(s), std::move(key)});
      return;
    }
    for (std::size_t part = 1; part <= remaining; ++part) {
      for (auto& comp : of_expr(arg, part)) {
        auto acc2 = acc;
        acc2.push_back(comp.s);
        auto keys2 = keys;
        keys2.push_back(comp.key);
        tuples(arg, ctor, remaining - part, std::move(acc2), std::move(keys2), out);
      }
    }
  }

  // Labelled tuples: components carry canonical local labels; once the tuple
  // is complete the global label pool is split among them in every way.
  void tuples_lab(const ClassExpr& arg, ListCtor ctor, std::size_t remaining,
                  std::vector<Structure> acc, std::vector<std::string> keys,
                  std::vector<Item>& out) {
    if (remaining == 0) {
      if (!acc.empty()) expand_labels(ctor, acc, keys, out);
      return;
    }
    for (std::size_t part = 1; part <= remaining; ++part)
      for (auto& comp : of_expr(arg, part)) {
        auto acc2 = acc;
        acc2.push_back(comp.s);
        auto keys2 = keys;
        keys2.push_back(comp.key);
        tuples_lab(arg, ctor, remaining - part, std::move(acc2), std::move(keys2), out);
      }
  }

  void expand_labels(ListCtor ctor, const std::vector<Structure>& comps,
                     const std::vector<std::string>& keys, std::vector<Item>& out) {
    std::size_t total = 0;
    std::vector<std::size_t> sizes;
    for (const auto& c : comps) {
      sizes.push_back(c.size());
      total += c.size();
    }
    std::vector<std::uint64_t> pool(total);
    for (std::size_t i = 0; i < total; ++i) pool[i] = i + 1;
    std::vector<std::vector<std::uint64_t>> parts(comps.size());
    expand_rec(ctor, comps, keys, sizes, pool, 0, parts, out);
  }

  void expand_rec(ListCtor ctor, const std::vector<Structure>& comps,
                  const std::vector<std::string>& keys,
                  const std::vector<std::size_t>& sizes,
                  std::vector<std::uint64_t> pool, std::size_t idx,
                  std::vector<std::vector<std::uint64_t>>& parts,
                  std::vector<Item>& out) {
    if (idx == comps.size()) {
      std::vector<Structure> labelled;
      std::vector<std::string> lkeys;
      for (std::size_t i = 0; i < comps.size(); ++i) {
        labelled.push_back(relabel(comps[i], parts[i]));
        lkeys.push_back(keys[i] + tag(parts[i]));
      }
      if (ctor == ListCtor::Set) {
        std::vector<std::size_t> order(comps.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return lkeys[a] < lkeys[b]; });
        std::vector<Structure> s2;
        std::vector<std::string> k2;
        for (auto i : order) {
          s2.push_back(labelled[i]);
          k2.push_back(lkeys[i]);
        }
        labelled = std::move(s2);
        lkeys = std::move(k2);
      } else if (ctor == ListCtor::Cycle && comps.size() > 1) {
        std::vector<std::string> best = lkeys;
        std::vector<Structure> bests = labelled;
        for (std::size_t r = 1; r < lkeys.size(); ++r) {
          std::rotate(lkeys.begin(), lkeys.begin() + 1, lkeys.end());
          std::rotate(labelled.begin(), labelled.begin() + 1, labelled.end());
          if (lkeys < best) {
            best = lkeys;
            bests = labelled;
          }
        }
        lkeys = best;
        labelled = bests;
      }
      std::string key = ctor_key(ctor) + "[";
      for (std::size_t i = 0; i < lkeys.size(); ++i) key += (i ? "," : "") + lkeys[i];
      key += "]";
      out.push_back({Structure::list(ctor, labelled), std::move(key)});
      return;
    }
    // Choose which labels go to component idx (all subsets of the pool).
    std::vector<std::uint64_t> chosen;
    choose_rec(ctor, comps, keys, sizes, pool, idx, parts, out, chosen, 0);
  }

  void choose_rec(ListCtor ctor, const std::vector<Structure>& comps,
                  const std::vector<std::string>& keys,
                  const std::vector<std::size_t>& sizes,
                  const std::vector<std::uint64_t>& pool, std::size_t idx,
                  std::vector<std::vector<std::uint64_t>>& parts,
                  std::vector<Item>& out, std::vector<std::uint64_t>& chosen,
                  std::size_t from) {
    if (chosen.size() == sizes[idx]) {
      std::vector<std::uint64_t> rest;
      std::set<std::uint64_t> sel(chosen.begin(), chosen.end());
      for (auto v : pool)
        if (!sel.count(v)) rest.push_back(v);
      parts[idx] = chosen;
      expand_rec(ctor, comps, keys, sizes, rest, idx + 1, parts, out);
      return;
    }
    for (std::size_t i = from; i < pool.size(); ++i) {
      chosen.push_back(pool[i]);
      choose_rec(ctor, comps, keys, sizes, pool, idx, parts, out, chosen, i + 1);
      chosen.pop_back();
    }
  }

  std::vector<std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>>>
  label_splits(std::size_t n, std::size_t left) {
    std::vector<std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>>> out;
    std::vector<std::uint64_t> chosen;
    split_rec(n, left, 1, chosen, out);
    return out;
  }
  void split_rec(std::size_t n, std::size_t left, std::uint64_t from,
                 std::vector<std::uint64_t>& chosen,
                 std::vector<std::pair<std::vector<std::uint64_t>, std::vector<std::uint64_t>>>& out) {
    if (chosen.size() == left) {
      std::vector<std::uint64_t> rest;
      std::set<std::uint64_t> sel(chosen.begin(), chosen.end());
      for (std::uint64_t v = 1; v <= n; ++v)
        if (!sel.count(v)) rest.push_back(v);
      out.emplace_back(chosen, rest);
      return;
    }
    for (std::uint64_t v = from; v + (left - chosen.size()) <= n + 1; ++v) {
      chosen.push_back(v);
      split_rec(n, left, v + 1, chosen, out);
      chosen.pop_back();
    }
  }

  static Structure relabel_rec(const Structure& s, const std::vector<std::uint64_t>& labels) {
    Structure r = s;
    r.items.clear();
    if (s.kind == boltzgen::NodeKind::Atom && s.label > 0)
      r.label = labels[s.label - 1];
    for (const auto& it : s.items) r.items.push_back(relabel_rec(it, labels));
    return r;
  }
  static Structure clone(const Structure& s) { return s; }

  static std::string tag(const std::vector<std::uint64_t>& labels) {
    std::string t = "{";
    for (std::size_t i = 0; i < labels.size(); ++i)
      t += (i ? "," : "") + std::to_string(labels[i]);
    return t + "}";
  }
  static std::string ctor_key(ListCtor c) {
    switch (c) {
      case ListCtor::Seq: return "Seq";
      case ListCtor::Cycle: return "Cyc";
      case ListCtor::Set: return "Set";
      case ListCtor::MSet: return "MSet";
    }
    return "?";
  }
  static void dedupe(std::vector<Item>& items) {
    std::sort(items.begin(), items.end(),
              [](const Item& a, const Item& b) { return a.key < b.key; });
    items.erase(std::unique(items.begin(), items.end(),
                            [](const Item& a, const Item& b) { return a.key == b.key; }),
                items.end());
  }

  const Spec& spec_;
  bool labelled_;
  int depth_ = 0;
  std::map<std::pair<std::string, std::size_t>, std::vector<Item>> memo_;
};

}  // namespace brute

#include "boltzgen/structure.hpp"

#include <algorithm>
#include <sstream>

#include <json.hpp>

namespace boltzgen {
namespace {

const char* ctor_name(ListCtor c) {
  switch (c) {
    case ListCtor::Seq: return "Seq";
    case ListCtor::Cycle: return "Cycle";
    case ListCtor::Set: return "Set";
    case ListCtor::MSet: return "MSet";
  }
  return "?";
}

void term_of(const Structure& s, std::ostream& os, bool labels, bool canonical,
             bool flatten_pair);

std::string term_str(const Structure& s, bool labels, bool canonical,
                     bool flatten_pair) {
  std::ostringstream os;
  term_of(s, os, labels, canonical, flatten_pair);
  return os.str();
}

void term_of(const Structure& s, std::ostream& os, bool labels, bool canonical,
             bool flatten_pair) {
  switch (s.kind) {
    case NodeKind::Empty:
      os << "1";
      if (s.variant > 0) os << "#" << s.variant;
      break;
    case NodeKind::Atom:
      os << (s.name == "Z" ? "Z" : "Z_" + s.name);
      if (labels && s.label > 0) os << "@" << s.label;
      break;
    case NodeKind::Pair: {
      // Left spines of products flatten to comma lists; a class wrapper or
      // explicit parentheses delimit them.
      if (!flatten_pair) os << "(";
      term_of(s.items[0], os, labels, canonical, s.items[0].kind == NodeKind::Pair);
      os << ",";
      term_of(s.items[1], os, labels, canonical, false);
      if (!flatten_pair) os << ")";
      break;
    }
    case NodeKind::List: {
      std::vector<std::string> parts;
      parts.reserve(s.items.size());
      for (const auto& it : s.items)
        parts.push_back(term_str(it, labels, canonical, false));
      if (canonical) {
        if (s.ctor == ListCtor::Set || s.ctor == ListCtor::MSet) {
          std::sort(parts.begin(), parts.end());
        } else if (s.ctor == ListCtor::Cycle && parts.size() > 1) {
          // Least rotation.
          std::vector<std::string> best = parts;
          for (std::size_t r = 1; r < parts.size(); ++r) {
            std::rotate(parts.begin(), parts.begin() + 1, parts.end());
            if (parts < best) best = parts;
          }
          parts = best;
        }
      }
      os << ctor_name(s.ctor) << "[";
      for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) os << ",";
        os << parts[i];
      }
      os << "]";
      break;
    }
    case NodeKind::Class:
      os << s.name << "(";
      term_of(s.items[0], os, labels, canonical, true);
      os << ")";
      break;
  }
}

nlohmann::json json_of(const Structure& s, bool with_class) {
  const Structure* node = &s;
  std::string cls;
  while (node->kind == NodeKind::Class) {
    cls = node->name;  // innermost wrapper names the construction below it
    node = &node->items[0];
  }
  nlohmann::json j;
  if (with_class && !cls.empty()) j["class"] = cls;
  switch (node->kind) {
    case NodeKind::Empty:
      j["kind"] = "empty";
      if (node->variant > 0) j["variant"] = node->variant;
      break;
    case NodeKind::Atom:
      j["kind"] = "atom";
      if (node->name != "Z") j["type"] = node->name;
      if (node->label > 0) j["label"] = node->label;
      break;
    case NodeKind::Pair: {
      j["kind"] = "pair";
      j["items"] = nlohmann::json::array(
          {json_of(node->items[0], with_class), json_of(node->items[1], with_class)});
      break;
    }
    case NodeKind::List: {
      j["kind"] = "list";
      j["construction"] = ctor_name(node->ctor);
      auto arr = nlohmann::json::array();
      for (const auto& it : node->items) arr.push_back(json_of(it, with_class));
      j["items"] = std::move(arr);
      break;
    }
    case NodeKind::Class:
      break;  // unreachable
  }
  return j;
}

}  // namespace

std::size_t Structure::size() const {
  std::size_t n = kind == NodeKind::Atom ? 1 : 0;
  for (const auto& it : items) n += it.size();
  return n;
}

Structure Structure::empty(std::uint32_t variant) {
  Structure s;
  s.kind = NodeKind::Empty;
  s.variant = variant;
  return s;
}
Structure Structure::atom(std::string type) {
  Structure s;
  s.kind = NodeKind::Atom;
  s.name = std::move(type);
  return s;
}
Structure Structure::pair(Structure left, Structure right) {
  Structure s;
  s.kind = NodeKind::Pair;
  s.items.push_back(std::move(left));
  s.items.push_back(std::move(right));
  return s;
}
Structure Structure::list(ListCtor ctor, std::vector<Structure> items) {
  Structure s;
  s.kind = NodeKind::List;
  s.ctor = ctor;
  s.items = std::move(items);
  return s;
}
Structure Structure::cls(std::string name, Structure inner) {
  Structure s;
  s.kind = NodeKind::Class;
  s.name = std::move(name);
  s.items.push_back(std::move(inner));
  return s;
}

std::string to_term(const Structure& s, bool with_labels) {
  return term_str(s, with_labels, false, false);
}

std::string to_canonical_term(const Structure& s, bool with_labels) {
  return term_str(s, with_labels, true, false);
}

std::string to_json(const Structure& s, bool with_class) {
  return json_of(s, with_class).dump();
}

}  // namespace boltzgen

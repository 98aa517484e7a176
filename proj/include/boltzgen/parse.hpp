#pragma once

#include <string>
#include <string_view>

#include "boltzgen/ast.hpp"
#include "boltzgen/errors.hpp"

namespace boltzgen {

/// 1-based position of a token inside the source text.
struct SourceSpan {
  std::size_t line = 1;
  std::size_t column = 1;
  std::size_t length = 0;
};

struct ParseError : Error {
  ParseError(SourceSpan span, const std::string& message);
  SourceSpan span;
};

/// Parses the class-definition DSL.
///
///   spec   := header? decl+
///   header := "@labelled" | "@unlabelled"          (default unlabelled)
///   decl   := NAME "=" expr ";"
///           | NAME "'" "=" expr ";"                (with a matching "(0)" line)
///           | NAME "(0)" "=" NAT ";"
///   expr   := term ("+" term)*
///   term   := factor ("*" factor)*
///   factor := "1" | "Z" | "Z_" IDENT | NAME
///           | ("Seq"|"Cycle"|"Set"|"MSet") "(" expr ")" | "(" expr ")"
///
/// '#' starts a comment running to end of line.
Spec parse_spec(std::string_view text);

/// Canonical text for a Spec; parse_spec(format_spec(s)) is structurally
/// identical to s, and formatting is idempotent after one pass.
std::string format_spec(const Spec& spec);

}  // namespace boltzgen

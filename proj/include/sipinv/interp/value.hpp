#pragma once

#include <sipinv/lang/ast.hpp>

#include <gmpxx.h>

#include <map>
#include <optional>
#include <random>
#include <string>
#include <variant>

namespace sipinv::interp {

/// Runtime value. Integers are unbounded; rationals are kept canonical
/// (lowest terms, positive denominator).
using Value = std::variant<bool, mpz_class, mpq_class>;

Value bool_value(bool b);
Value int_value(mpz_class z);
Value rat_value(mpq_class q);

bool as_bool(const Value& v);
bool is_numeric(const Value& v);
/// Numeric value widened to a rational.
mpq_class as_rational(const Value& v);

bool values_equal(const Value& a, const Value& b);

/// Decimal integers, `num/den` rationals, `true`/`false`.
std::string render(const Value& v);

/// Parses a rendered value for a variable of type `t`; nullopt if the text
/// is malformed or the value does not conform to the type.
std::optional<Value> parse_value(std::string_view text, lang::Type t);

bool conforms(const Value& v, lang::Type t);

/// Converts a value for storage in a variable of type `t` (integers widen to
/// rationals). Returns nullopt when the value cannot be stored.
std::optional<Value> coerce(const Value& v, lang::Type t);

Value default_value(lang::Type t);

/// Literal expression denoting `v`.
lang::ExprPtr to_literal(const Value& v);

enum class Location { Unspecified, PreLoop, LoopHead, PostLoop };

std::string_view to_string(Location loc);

/// Variable valuation, optionally tagged with where it was observed.
struct State {
  std::map<std::string, Value> values;
  Location location = Location::Unspecified;
  int iteration = -1;

  const Value& at(const std::string& name) const;
  bool operator==(const State& other) const;
};

using Rng = std::mt19937_64;

/// Draws a value of type `t` from the sampling distribution: integers in
/// [-100, 100], naturals in [0, 100], rationals with numerator and
/// denominator in [-100, 100].
Value sample_value(lang::Type t, Rng& rng);

/// Sampled values for every variable of `env`.
State sample_state(const lang::TypeEnv& env, Rng& rng);

/// Independent stream for sample `index` of a seeded run; keeps sampling
/// reproducible whichever thread draws it.
Rng stream_rng(std::uint64_t seed, std::uint64_t index);

}  // namespace sipinv::interp

#include <sipinv/interp/value.hpp>

#include <stdexcept>

namespace sipinv::interp {

Value bool_value(bool b) { return Value{b}; }
Value int_value(mpz_class z) { return Value{std::move(z)}; }
Value rat_value(mpq_class q) {
  q.canonicalize();
  return Value{std::move(q)};
}

bool as_bool(const Value& v) {
  if (const auto* b = std::get_if<bool>(&v)) return *b;
  throw std::logic_error("expected a boolean value");
}

bool is_numeric(const Value& v) { return !std::holds_alternative<bool>(v); }

mpq_class as_rational(const Value& v) {
  if (const auto* z = std::get_if<mpz_class>(&v)) return mpq_class(*z);
  if (const auto* q = std::get_if<mpq_class>(&v)) return *q;
  throw std::logic_error("expected a numeric value");
}

bool values_equal(const Value& a, const Value& b) {
  if (is_numeric(a) != is_numeric(b)) return false;
  if (!is_numeric(a)) return std::get<bool>(a) == std::get<bool>(b);
  if (std::holds_alternative<mpz_class>(a) && std::holds_alternative<mpz_class>(b)) {
    return std::get<mpz_class>(a) == std::get<mpz_class>(b);
  }
  return as_rational(a) == as_rational(b);
}

std::string render(const Value& v) {
  if (const auto* b = std::get_if<bool>(&v)) return *b ? "true" : "false";
  if (const auto* z = std::get_if<mpz_class>(&v)) return z->get_str();
  const auto& q = std::get<mpq_class>(v);
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

namespace {

bool is_integer_text(std::string_view s) {
  std::size_t i = (!s.empty() && (s[0] == '-' || s[0] == '+')) ? 1 : 0;
  if (i >= s.size()) return false;
  for (; i < s.size(); ++i)
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

std::optional<mpz_class> parse_integer(std::string_view s) {
  if (!is_integer_text(s)) return std::nullopt;
  if (s[0] == '+') s.remove_prefix(1);
  return mpz_class(std::string(s));
}

}  // namespace

std::optional<Value> parse_value(std::string_view text, lang::Type t) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  if (t == lang::Type::Boolean) {
    if (text == "true") return bool_value(true);
    if (text == "false") return bool_value(false);
    return std::nullopt;
  }
  std::optional<Value> v;
  if (auto slash = text.find('/'); slash != std::string_view::npos) {
    auto num = parse_integer(text.substr(0, slash));
    auto den = parse_integer(text.substr(slash + 1));
    if (!num || !den || *den == 0) return std::nullopt;
    v = rat_value(mpq_class(*num, *den));
  } else if (auto z = parse_integer(text)) {
    v = int_value(*z);
  } else {
    return std::nullopt;
  }
  return coerce(*v, t);
}

bool conforms(const Value& v, lang::Type t) {
  switch (t) {
    case lang::Type::Boolean:
      return std::holds_alternative<bool>(v);
    case lang::Type::Natural:
      return std::holds_alternative<mpz_class>(v) && sgn(std::get<mpz_class>(v)) >= 0;
    case lang::Type::Integer:
      return std::holds_alternative<mpz_class>(v);
    case lang::Type::Rational:
      return std::holds_alternative<mpq_class>(v);
  }
  return false;
}

std::optional<Value> coerce(const Value& v, lang::Type t) {
  if (t == lang::Type::Boolean) {
    if (!std::holds_alternative<bool>(v)) return std::nullopt;
    return v;
  }
  if (!is_numeric(v)) return std::nullopt;
  if (t == lang::Type::Rational) return rat_value(as_rational(v));
  mpq_class q = as_rational(v);
  if (q.get_den() != 1) return std::nullopt;
  if (t == lang::Type::Natural && sgn(q) < 0) return std::nullopt;
  return int_value(q.get_num());
}

Value default_value(lang::Type t) {
  switch (t) {
    case lang::Type::Boolean:
      return bool_value(false);
    case lang::Type::Rational:
      return rat_value(0);
    default:
      return int_value(0);
  }
}

lang::ExprPtr to_literal(const Value& v) {
  if (const auto* b = std::get_if<bool>(&v)) return lang::make_bool(*b);
  if (const auto* z = std::get_if<mpz_class>(&v)) return lang::make_int(*z);
  return lang::make_rat(std::get<mpq_class>(v));
}

std::string_view to_string(Location loc) {
  switch (loc) {
    case Location::PreLoop:
      return "pre-loop";
    case Location::LoopHead:
      return "loop-head";
    case Location::PostLoop:
      return "post-loop";
    default:
      return "unspecified";
  }
}

const Value& State::at(const std::string& name) const {
  auto it = values.find(name);
  if (it == values.end()) throw std::out_of_range("no value for variable '" + name + "'");
  return it->second;
}

bool State::operator==(const State& other) const {
  if (values.size() != other.values.size()) return false;
  auto a = values.begin();
  auto b = other.values.begin();
  for (; a != values.end(); ++a, ++b) {
    if (a->first != b->first || a->second.index() != b->second.index() || !values_equal(a->second, b->second)) {
      return false;
    }
  }
  return location == other.location && iteration == other.iteration;
}

Value sample_value(lang::Type t, Rng& rng) {
  std::uniform_int_distribution<long> small(-100, 100);
  switch (t) {
    case lang::Type::Boolean:
      return bool_value(std::uniform_int_distribution<int>(0, 1)(rng) == 1);
    case lang::Type::Natural:
      return int_value(std::uniform_int_distribution<long>(0, 100)(rng));
    case lang::Type::Integer:
      return int_value(small(rng));
    case lang::Type::Rational: {
      long num = small(rng);
      long den = 0;
      while (den == 0) den = small(rng);
      return rat_value(mpq_class(num, den));
    }
  }
  return int_value(0);
}

State sample_state(const lang::TypeEnv& env, Rng& rng) {
  State s;
  for (const auto& [name, type] : env) s.values.emplace(name, sample_value(type, rng));
  return s;
}

Rng stream_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

}  // namespace sipinv::interp

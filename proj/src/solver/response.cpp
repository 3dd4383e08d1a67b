#include <sipinv/solver/solver.hpp>

#include <cctype>

namespace sipinv::solver {

namespace {

class SExprReader {
 public:
  explicit SExprReader(std::string_view text) : text_(text) {}

  bool at_end() {
    skip();
    return pos_ >= text_.size();
  }

  SExpr read() {
    skip();
    if (pos_ >= text_.size()) throw TransportError("unexpected end of prover output");
    char c = text_[pos_];
    if (c == ')') throw TransportError("unbalanced ')' in prover output");
    if (c == '(') {
      ++pos_;
      SExpr node;
      node.is_list = true;
      while (true) {
        skip();
        if (pos_ >= text_.size()) throw TransportError("unbalanced '(' in prover output");
        if (text_[pos_] == ')') {
          ++pos_;
          return node;
        }
        node.list.push_back(read());
      }
    }
    SExpr atom;
    if (c == '"') {
      std::size_t end = pos_ + 1;
      while (end < text_.size()) {
        if (text_[end] == '"') {
          if (end + 1 < text_.size() && text_[end + 1] == '"') {
            end += 2;
            continue;
          }
          break;
        }
        ++end;
      }
      atom.atom = std::string(text_.substr(pos_, end + 1 - pos_));
      pos_ = end + 1;
      return atom;
    }
    if (c == '|') {
      std::size_t end = text_.find('|', pos_ + 1);
      if (end == std::string_view::npos) throw TransportError("unterminated quoted symbol");
      atom.atom = std::string(text_.substr(pos_ + 1, end - pos_ - 1));
      pos_ = end + 1;
      return atom;
    }
    std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
           text_[pos_] != ')') {
      ++pos_;
    }
    atom.atom = std::string(text_.substr(start, pos_ - start));
    return atom;
  }

 private:
  void skip() {
    while (pos_ < text_.size()) {
      if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      } else if (text_[pos_] == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

std::optional<mpq_class> parse_decimal(const std::string& s) {
  if (s.empty()) return std::nullopt;
  std::size_t dot = s.find('.');
  std::string digits = dot == std::string::npos ? s : s.substr(0, dot) + s.substr(dot + 1);
  if (digits.empty()) return std::nullopt;
  for (char c : digits)
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
  mpz_class num(digits);
  mpz_class den = 1;
  if (dot != std::string::npos) mpz_ui_pow_ui(den.get_mpz_t(), 10, s.size() - dot - 1);
  mpq_class q(num, den);
  q.canonicalize();
  return q;
}

void collect_definitions(const SExpr& e, std::map<std::string, SExpr>& out) {
  if (!e.is_list) return;
  if (e.list.size() == 5 && !e.list[0].is_list && e.list[0].atom == "define-fun" && !e.list[1].is_list &&
      e.list[2].is_list && e.list[2].list.empty()) {
    out[e.list[1].atom] = e.list[4];
    return;
  }
  for (const auto& child : e.list) collect_definitions(child, out);
}

}  // namespace

std::vector<SExpr> parse_sexprs(std::string_view text) {
  SExprReader reader(text);
  std::vector<SExpr> out;
  while (!reader.at_end()) out.push_back(reader.read());
  return out;
}

std::optional<mpq_class> model_number(const SExpr& term) {
  if (!term.is_list) return parse_decimal(term.atom);
  if (term.list.empty() || term.list[0].is_list) return std::nullopt;
  const auto& head = term.list[0].atom;
  if (head == "-" && term.list.size() == 2) {
    auto v = model_number(term.list[1]);
    if (!v) return std::nullopt;
    return mpq_class(-*v);
  }
  if (head == "/" && term.list.size() == 3) {
    auto a = model_number(term.list[1]);
    auto b = model_number(term.list[2]);
    if (!a || !b || sgn(*b) == 0) return std::nullopt;
    return mpq_class(*a / *b);
  }
  return std::nullopt;
}

Response parse_response(std::string_view output) {
  auto items = parse_sexprs(output);
  if (items.empty()) throw TransportError("prover produced no output");
  Response r;
  const auto& first = items.front();
  if (first.is_list) {
    throw TransportError("unexpected prover reply: " +
                         std::string(output.substr(0, std::min<std::size_t>(output.size(), 200))));
  }
  if (first.atom == "sat") {
    r.status = Response::Status::Sat;
  } else if (first.atom == "unsat") {
    r.status = Response::Status::Unsat;
  } else if (first.atom == "unknown" || first.atom == "timeout") {
    r.status = Response::Status::Unknown;
  } else {
    throw TransportError("unexpected prover reply '" + first.atom + "'");
  }
  if (r.status == Response::Status::Sat) {
    for (std::size_t i = 1; i < items.size(); ++i) collect_definitions(items[i], r.model);
  }
  return r;
}

}  // namespace sipinv::solver

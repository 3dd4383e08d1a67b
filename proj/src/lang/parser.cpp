#include <sipinv/lang/parser.hpp>
#include <sipinv/lang/typecheck.hpp>

#include <cctype>
#include <set>

namespace sipinv::lang {

namespace {

enum class Tok { Ident, Int, Decimal, Punct, End };

struct Token {
  Tok kind;
  std::string text;
  SourcePos pos;
};

constexpr int kMaxExponent = 64;

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      SourcePos pos{line_, col_};
      if (at_end()) {
        out.push_back({Tok::End, "", pos});
        return out;
      }
      char c = peek();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        std::string id;
        while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_')) id += advance();
        out.push_back({Tok::Ident, id, pos});
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        std::string num;
        while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) num += advance();
        if (!at_end() && peek() == '.' && pos_ + 1 < src_.size() &&
            std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
          num += advance();
          while (!at_end() && std::isdigit(static_cast<unsigned char>(peek()))) num += advance();
          out.push_back({Tok::Decimal, num, pos});
        } else {
          out.push_back({Tok::Int, num, pos});
        }
      } else {
        out.push_back({Tok::Punct, punct(pos), pos});
      }
    }
  }

 private:
  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }
  char advance() {
    char c = src_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    while (!at_end()) {
      if (std::isspace(static_cast<unsigned char>(peek()))) {
        advance();
      } else if (peek() == '/' && pos_ + 1 < src_.size() && src_[pos_ + 1] == '/') {
        while (!at_end() && peek() != '\n') advance();
      } else {
        return;
      }
    }
  }

  std::string punct(SourcePos pos) {
    static const char* const two[] = {":=", "<=", ">=", "!=", "==", "&&", "||"};
    if (pos_ + 1 < src_.size()) {
      std::string_view pair = src_.substr(pos_, 2);
      for (const char* t : two) {
        if (pair == t) {
          advance();
          advance();
          if (pair == "==") return "=";
          if (pair == "&&") return "&";
          if (pair == "||") return "|";
          return std::string(pair);
        }
      }
    }
    char c = peek();
    static const std::string singles = "(){}[];:,+-*/%^=<>&|!";
    if (singles.find(c) == std::string::npos) {
      throw LangError(ErrorKind::Syntax, pos, std::string("unexpected character '") + c + "'");
    }
    advance();
    return std::string(1, c);
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

const std::set<std::string, std::less<>> kKeywords = {"fn",     "var",    "if",    "else",   "while",
                                                      "print",  "assume", "assert", "claim", "cassign",
                                                      "pre",    "post",   "true",  "false"};

class Parser {
 public:
  explicit Parser(std::string_view src) : toks_(Lexer(src).run()) {}

  Program program() {
    Program p;
    expect_word("fn");
    p.name = ident();
    expect("(");
    if (!is(")")) {
      do {
        Param param;
        param.name = ident();
        expect(":");
        param.type = type();
        p.params.push_back(std::move(param));
      } while (accept(","));
    }
    expect(")");
    expect(":");
    p.return_type = type();
    expect("{");
    if (is_word("pre")) {
      next();
      expect("(");
      p.pre = expr();
      expect(")");
      expect(";");
    }
    if (is_word("post")) {
      next();
      expect("(");
      p.post = expr();
      expect(")");
      expect(";");
    }
    if (!p.post) p.post = make_bool(true);
    std::vector<StmtPtr> stmts;
    while (!is("}")) stmts.push_back(stmt());
    expect("}");
    if (is_word("fn")) {
      throw LangError(ErrorKind::Structure, cur().pos, "multiple functions: only a single function is supported");
    }
    if (cur().kind != Tok::End) syntax_error("expected end of input");
    split_loop(p, std::move(stmts));
    return p;
  }

  ExprPtr lone_expr() {
    ExprPtr e = expr();
    if (cur().kind != Tok::End) syntax_error("unexpected trailing input");
    return e;
  }

 private:
  // -- token helpers
  const Token& cur() const { return toks_[i_]; }
  void next() {
    if (i_ + 1 < toks_.size()) ++i_;
  }
  bool is(std::string_view p) const { return cur().kind == Tok::Punct && cur().text == p; }
  bool is_word(std::string_view w) const { return cur().kind == Tok::Ident && cur().text == w; }
  bool accept(std::string_view p) {
    if (!is(p)) return false;
    next();
    return true;
  }
  [[noreturn]] void syntax_error(const std::string& msg) const {
    std::string found = cur().kind == Tok::End ? "end of input" : "'" + cur().text + "'";
    throw LangError(ErrorKind::Syntax, cur().pos, msg + ", found " + found);
  }
  void expect(std::string_view p) {
    if (!accept(p)) syntax_error("expected '" + std::string(p) + "'");
  }
  void expect_word(std::string_view w) {
    if (!is_word(w)) syntax_error("expected '" + std::string(w) + "'");
    next();
  }
  std::string ident() {
    if (cur().kind != Tok::Ident || kKeywords.count(cur().text)) syntax_error("expected identifier");
    if (cur().text.rfind("__", 0) == 0) {
      throw LangError(ErrorKind::Syntax, cur().pos, "identifiers starting with '__' are reserved");
    }
    std::string id = cur().text;
    next();
    return id;
  }
  Type type() {
    if (cur().kind == Tok::Ident) {
      if (auto t = parse_type_name(cur().text)) {
        next();
        return *t;
      }
    }
    syntax_error("expected type (Boolean, Natural, Integer, Rational)");
  }

  // -- statements
  StmtPtr block() {
    SourcePos pos = cur().pos;
    expect("{");
    std::vector<StmtPtr> stmts;
    while (!is("}")) stmts.push_back(stmt());
    expect("}");
    return make_block(std::move(stmts), pos);
  }

  ExprPtr paren_expr() {
    expect("(");
    ExprPtr e = expr();
    expect(")");
    return e;
  }

  StmtPtr stmt() {
    SourcePos pos = cur().pos;
    if (cur().kind != Tok::Ident) syntax_error("expected statement");
    const std::string w = cur().text;
    if (w == "var") {
      next();
      std::string name = ident();
      expect(":");
      Type t = type();
      expect(";");
      return make_stmt(VarDecl{std::move(name), t}, pos);
    }
    if (w == "if") {
      next();
      ExprPtr c = paren_expr();
      StmtPtr then_b = block();
      StmtPtr else_b;
      if (is_word("else")) {
        next();
        else_b = block();
      } else {
        else_b = make_block({}, pos);
      }
      return make_stmt(If{std::move(c), std::move(then_b), std::move(else_b)}, pos);
    }
    if (w == "while") {
      next();
      ExprPtr annotation;
      if (accept("[")) {
        annotation = expr();
        expect("]");
      }
      ExprPtr test = paren_expr();
      StmtPtr body = block();
      return make_stmt(While{std::move(annotation), std::move(test), std::move(body)}, pos);
    }
    if (w == "print") {
      next();
      expect("(");
      std::vector<ExprPtr> args;
      if (!is(")")) {
        do {
          args.push_back(expr());
        } while (accept(","));
      }
      expect(")");
      expect(";");
      return make_stmt(Print{std::move(args)}, pos);
    }
    if (w == "assume" || w == "assert" || w == "claim") {
      next();
      ExprPtr c = paren_expr();
      expect(";");
      if (w == "assume") return make_stmt(Assume{std::move(c)}, pos);
      return make_stmt(Assert{std::move(c), w == "claim"}, pos);
    }
    if (w == "cassign") {
      next();
      expect("(");
      expect("[");
      std::vector<std::string> targets;
      do {
        targets.push_back(ident());
      } while (accept(","));
      expect("]");
      expect(",");
      ExprPtr c = expr();
      expect(")");
      expect(";");
      return make_stmt(CAssign{std::move(targets), std::move(c)}, pos);
    }
    std::string target = ident();
    expect(":=");
    ExprPtr value = expr();
    expect(";");
    return make_stmt(Assign{std::move(target), std::move(value)}, pos);
  }

  // -- expressions
  ExprPtr expr() { return or_expr(); }

  ExprPtr or_expr() {
    ExprPtr lhs = and_expr();
    while (is("|")) {
      SourcePos pos = cur().pos;
      next();
      lhs = make_binary(BinaryOp::Or, lhs, and_expr(), pos);
    }
    return lhs;
  }

  ExprPtr and_expr() {
    ExprPtr lhs = cmp_expr();
    while (is("&")) {
      SourcePos pos = cur().pos;
      next();
      lhs = make_binary(BinaryOp::And, lhs, cmp_expr(), pos);
    }
    return lhs;
  }

  std::optional<BinaryOp> cmp_op() const {
    if (cur().kind != Tok::Punct) return std::nullopt;
    const auto& t = cur().text;
    if (t == "=") return BinaryOp::Eq;
    if (t == "!=") return BinaryOp::Ne;
    if (t == "<") return BinaryOp::Lt;
    if (t == "<=") return BinaryOp::Le;
    if (t == ">") return BinaryOp::Gt;
    if (t == ">=") return BinaryOp::Ge;
    return std::nullopt;
  }

  ExprPtr cmp_expr() {
    ExprPtr lhs = add_expr();
    if (auto op = cmp_op()) {
      SourcePos pos = cur().pos;
      next();
      ExprPtr rhs = add_expr();
      if (cmp_op()) syntax_error("comparisons do not chain; add parentheses");
      return make_binary(*op, lhs, rhs, pos);
    }
    return lhs;
  }

  ExprPtr add_expr() {
    ExprPtr lhs = mul_expr();
    while (is("+") || is("-")) {
      BinaryOp op = is("+") ? BinaryOp::Add : BinaryOp::Sub;
      SourcePos pos = cur().pos;
      next();
      lhs = make_binary(op, lhs, mul_expr(), pos);
    }
    return lhs;
  }

  ExprPtr mul_expr() {
    ExprPtr lhs = pow_expr();
    while (is("*") || is("/") || is("%")) {
      BinaryOp op = is("*") ? BinaryOp::Mul : is("/") ? BinaryOp::Div : BinaryOp::Mod;
      SourcePos pos = cur().pos;
      next();
      lhs = make_binary(op, lhs, pow_expr(), pos);
    }
    return lhs;
  }

  ExprPtr pow_expr() {
    ExprPtr base = unary_expr();
    while (is("^")) {
      SourcePos pos = cur().pos;
      next();
      if (cur().kind != Tok::Int) {
        throw LangError(ErrorKind::Syntax, cur().pos, "exponent of '^' must be a non-negative integer literal");
      }
      mpz_class k(cur().text);
      if (k > kMaxExponent) {
        throw LangError(ErrorKind::Syntax, cur().pos, "exponent too large (max " + std::to_string(kMaxExponent) + ")");
      }
      next();
      const long n = k.get_si();
      if (n == 0) {
        base = make_int(1, pos);
        continue;
      }
      ExprPtr acc = base;
      for (long j = 1; j < n; ++j) acc = make_binary(BinaryOp::Mul, acc, base, pos);
      base = acc;
    }
    return base;
  }

  ExprPtr unary_expr() {
    SourcePos pos = cur().pos;
    if (accept("-")) return make_unary(UnaryOp::Negate, unary_expr(), pos);
    if (accept("!")) return make_unary(UnaryOp::Not, unary_expr(), pos);
    return atom();
  }

  ExprPtr atom() {
    SourcePos pos = cur().pos;
    const Token& t = cur();
    if (t.kind == Tok::Int) {
      mpz_class v(t.text);
      next();
      return make_int(std::move(v), pos);
    }
    if (t.kind == Tok::Decimal) {
      const auto dot = t.text.find('.');
      std::string digits = t.text.substr(0, dot) + t.text.substr(dot + 1);
      mpz_class num(digits);
      mpz_class den;
      mpz_ui_pow_ui(den.get_mpz_t(), 10, t.text.size() - dot - 1);
      next();
      return make_rat(mpq_class(num, den), pos);
    }
    if (is_word("true")) {
      next();
      return make_bool(true, pos);
    }
    if (is_word("false")) {
      next();
      return make_bool(false, pos);
    }
    if (t.kind == Tok::Ident) return make_var(ident(), pos);
    if (accept("(")) {
      ExprPtr e = expr();
      expect(")");
      return e;
    }
    syntax_error("expected expression");
  }

  // -- structure
  static bool contains_while(const Stmt& s) {
    if (std::holds_alternative<While>(s.node)) return true;
    if (const auto* b = std::get_if<Block>(&s.node)) {
      for (const auto& c : b->stmts)
        if (contains_while(*c)) return true;
    }
    if (const auto* i = std::get_if<If>(&s.node)) return contains_while(*i->then_branch) || contains_while(*i->else_branch);
    return false;
  }

  static bool contains_decl(const Stmt& s) {
    if (std::holds_alternative<VarDecl>(s.node)) return true;
    if (const auto* b = std::get_if<Block>(&s.node)) {
      for (const auto& c : b->stmts)
        if (contains_decl(*c)) return true;
    }
    if (const auto* i = std::get_if<If>(&s.node)) return contains_decl(*i->then_branch) || contains_decl(*i->else_branch);
    if (const auto* w = std::get_if<While>(&s.node)) return contains_decl(*w->body);
    return false;
  }

  static void split_loop(Program& p, std::vector<StmtPtr> stmts) {
    std::optional<std::size_t> loop_at;
    for (std::size_t i = 0; i < stmts.size(); ++i) {
      const Stmt& s = *stmts[i];
      if (const auto* w = std::get_if<While>(&s.node)) {
        if (loop_at) throw LangError(ErrorKind::Structure, s.pos, "multiple loops: only a single while loop is supported");
        if (contains_while(*w->body)) throw LangError(ErrorKind::Structure, s.pos, "nested loops are not supported");
        loop_at = i;
      } else if (contains_while(s)) {
        throw LangError(ErrorKind::Structure, s.pos, "the while loop must appear at the top level of the function");
      }
    }
    if (!loop_at) throw LangError(ErrorKind::Structure, SourcePos{1, 1}, "no while loop present");

    for (const auto& param : p.params) {
      if (!p.env.emplace(param.name, param.type).second) {
        throw LangError(ErrorKind::Structure, SourcePos{1, 1}, "duplicate parameter '" + param.name + "'");
      }
    }
    for (std::size_t i = 0; i < stmts.size(); ++i) {
      const Stmt& s = *stmts[i];
      if (const auto* d = std::get_if<VarDecl>(&s.node)) {
        if (i > *loop_at) throw LangError(ErrorKind::Structure, s.pos, "declarations must precede the loop");
        if (!p.env.emplace(d->name, d->type).second) {
          throw LangError(ErrorKind::Structure, s.pos, "'" + d->name + "' is declared more than once");
        }
      } else if (contains_decl(s)) {
        throw LangError(ErrorKind::Structure, s.pos, "declarations must appear at the top level of the function");
      }
    }

    const auto& w = std::get<While>(stmts[*loop_at]->node);
    p.loop_annotation = w.annotation;
    p.test = w.test;
    p.body = w.body;
    p.loop_pos = stmts[*loop_at]->pos;
    p.prelude.assign(stmts.begin(), stmts.begin() + static_cast<std::ptrdiff_t>(*loop_at));
    p.epilogue.assign(stmts.begin() + static_cast<std::ptrdiff_t>(*loop_at) + 1, stmts.end());
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
};

}  // namespace

Program parse_program(std::string_view source) { return Parser(source).program(); }

ExprPtr parse_expr_untyped(std::string_view source) { return Parser(source).lone_expr(); }

ExprPtr parse_expr(std::string_view source, const TypeEnv& env) {
  ExprPtr e = parse_expr_untyped(source);
  require_boolean(*e, env);
  return e;
}

Program load_program(std::string_view source) {
  Program p = parse_program(source);
  auto result = typecheck(p);
  if (auto* errors = std::get_if<std::vector<Diagnostic>>(&result)) {
    throw LangError(ErrorKind::Type, std::move(*errors));
  }
  p.env = std::get<TypeEnv>(std::move(result));
  return p;
}

}  // namespace sipinv::lang

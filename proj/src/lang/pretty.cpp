#include <sipinv/lang/pretty.hpp>

#include <sstream>

namespace sipinv::lang {

namespace {

int precedence(BinaryOp op) {
  switch (op) {
    case BinaryOp::Or:
      return 1;
    case BinaryOp::And:
      return 2;
    case BinaryOp::Eq:
    case BinaryOp::Ne:
    case BinaryOp::Lt:
    case BinaryOp::Le:
    case BinaryOp::Gt:
    case BinaryOp::Ge:
      return 3;
    case BinaryOp::Add:
    case BinaryOp::Sub:
      return 4;
    case BinaryOp::Mul:
    case BinaryOp::Div:
    case BinaryOp::Mod:
      return 5;
  }
  return 0;
}

constexpr int kUnaryPrec = 7;
constexpr int kAtomPrec = 8;

int precedence(const Expr& e) {
  if (const auto* b = std::get_if<Binary>(&e.node)) return precedence(b->op);
  if (std::holds_alternative<Unary>(e.node)) return kUnaryPrec;
  if (const auto* i = std::get_if<IntLit>(&e.node); i && sgn(i->value) < 0) return kUnaryPrec;
  if (const auto* r = std::get_if<RatLit>(&e.node); r && sgn(r->value) < 0) return kUnaryPrec;
  return kAtomPrec;
}

// Finite decimal when the denominator has only factors 2 and 5; otherwise a
// parenthesised quotient.
std::string rat_literal(const mpq_class& q) {
  mpz_class den = q.get_den();
  unsigned twos = 0, fives = 0;
  while (den % 2 == 0) {
    den /= 2;
    ++twos;
  }
  while (den % 5 == 0) {
    den /= 5;
    ++fives;
  }
  if (den != 1) return "(" + q.get_num().get_str() + "/" + q.get_den().get_str() + ")";
  const unsigned places = std::max(1u, std::max(twos, fives));
  mpz_class scale;
  mpz_ui_pow_ui(scale.get_mpz_t(), 10, places);
  mpz_class scaled = abs(q.get_num()) * scale / q.get_den();
  std::string digits = scaled.get_str();
  if (digits.size() <= places) digits.insert(0, places - digits.size() + 1, '0');
  std::string out = digits.substr(0, digits.size() - places) + "." + digits.substr(digits.size() - places);
  return sgn(q) < 0 ? "-" + out : out;
}

void print(std::ostream& os, const Expr& e);

void print_wrapped(std::ostream& os, const Expr& e, bool parens) {
  if (parens) os << '(';
  print(os, e);
  if (parens) os << ')';
}

void print(std::ostream& os, const Expr& e) {
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BoolLit>) {
          os << (n.value ? "true" : "false");
        } else if constexpr (std::is_same_v<T, IntLit>) {
          os << n.value.get_str();
        } else if constexpr (std::is_same_v<T, RatLit>) {
          os << rat_literal(n.value);
        } else if constexpr (std::is_same_v<T, VarRef>) {
          os << n.name;
        } else if constexpr (std::is_same_v<T, Unary>) {
          os << (n.op == UnaryOp::Negate ? "-" : "!");
          print_wrapped(os, *n.operand, precedence(*n.operand) < kUnaryPrec);
        } else {
          const int p = precedence(n.op);
          print_wrapped(os, *n.lhs, precedence(*n.lhs) < p || (p == 3 && precedence(*n.lhs) == 3));
          os << ' ' << spelling(n.op) << ' ';
          print_wrapped(os, *n.rhs, precedence(*n.rhs) <= p);
        }
      },
      e.node);
}

std::string pad(int indent) { return std::string(static_cast<std::size_t>(indent) * 2, ' '); }

void print_block(std::ostream& os, const Stmt& s, int indent) {
  os << "{\n";
  for (const auto& c : std::get<Block>(s.node).stmts) os << to_string(*c, indent + 1);
  os << pad(indent) << "}";
}

}  // namespace

std::string render(const mpq_class& q) {
  if (q.get_den() == 1) return q.get_num().get_str();
  return q.get_num().get_str() + "/" + q.get_den().get_str();
}

std::string to_string(const Expr& e) {
  std::ostringstream os;
  print(os, e);
  return os.str();
}

std::string to_string(const ExprPtr& e) { return e ? to_string(*e) : std::string("<null>"); }

std::string to_string(const Stmt& s, int indent) {
  std::ostringstream os;
  os << pad(indent);
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, VarDecl>) {
          os << "var " << n.name << ": " << to_string(n.type) << ";\n";
        } else if constexpr (std::is_same_v<T, Assign>) {
          os << n.target << " := " << to_string(*n.value) << ";\n";
        } else if constexpr (std::is_same_v<T, Block>) {
          print_block(os, s, indent);
          os << "\n";
        } else if constexpr (std::is_same_v<T, If>) {
          os << "if (" << to_string(*n.cond) << ") ";
          print_block(os, *n.then_branch, indent);
          os << " else ";
          print_block(os, *n.else_branch, indent);
          os << "\n";
        } else if constexpr (std::is_same_v<T, While>) {
          os << "while ";
          if (n.annotation) os << "[" << to_string(*n.annotation) << "] ";
          os << "(" << to_string(*n.test) << ") ";
          print_block(os, *n.body, indent);
          os << "\n";
        } else if constexpr (std::is_same_v<T, Print>) {
          os << "print(";
          for (std::size_t i = 0; i < n.args.size(); ++i) os << (i ? ", " : "") << to_string(*n.args[i]);
          os << ");\n";
        } else if constexpr (std::is_same_v<T, Assume>) {
          os << "assume(" << to_string(*n.cond) << ");\n";
        } else if constexpr (std::is_same_v<T, Assert>) {
          os << (n.claim ? "claim(" : "assert(") << to_string(*n.cond) << ");\n";
        } else if constexpr (std::is_same_v<T, CAssign>) {
          os << "cassign([";
          for (std::size_t i = 0; i < n.targets.size(); ++i) os << (i ? ", " : "") << n.targets[i];
          os << "], " << to_string(*n.constraint) << ");\n";
        } else if constexpr (std::is_same_v<T, LoopHeadMark>) {
          os << "// loop head " << n.iteration << "\n";
        }
      },
      s.node);
  return os.str();
}

std::string to_string(const Program& p) {
  std::ostringstream os;
  os << "fn " << p.name << "(";
  for (std::size_t i = 0; i < p.params.size(); ++i) {
    os << (i ? ", " : "") << p.params[i].name << ": " << to_string(p.params[i].type);
  }
  os << "): " << to_string(p.return_type) << " {\n";
  if (p.pre) os << "  pre(" << to_string(*p.pre) << ");\n";
  os << "  post(" << to_string(*p.post) << ");\n";
  for (const auto& s : p.prelude) os << to_string(*s, 1);
  auto loop = make_stmt(While{p.loop_annotation, p.test, p.body}, p.loop_pos);
  os << to_string(*loop, 1);
  for (const auto& s : p.epilogue) os << to_string(*s, 1);
  os << "}\n";
  return os.str();
}

}  // namespace sipinv::lang

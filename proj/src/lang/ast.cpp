#include <sipinv/lang/ast.hpp>
#include <sipinv/lang/diagnostics.hpp>

#include <algorithm>
#include <set>

namespace sipinv::lang {

std::string_view to_string(Type type) {
  switch (type) {
    case Type::Boolean:
      return "Boolean";
    case Type::Natural:
      return "Natural";
    case Type::Integer:
      return "Integer";
    case Type::Rational:
      return "Rational";
  }
  return "?";
}

std::optional<Type> parse_type_name(std::string_view name) {
  if (name == "Boolean") return Type::Boolean;
  if (name == "Natural") return Type::Natural;
  if (name == "Integer") return Type::Integer;
  if (name == "Rational") return Type::Rational;
  return std::nullopt;
}

std::string_view to_string(ExprType type) {
  switch (type) {
    case ExprType::Bool:
      return "boolean";
    case ExprType::Int:
      return "integer";
    case ExprType::Rat:
      return "rational";
  }
  return "?";
}

ExprType expr_type_of(Type t) {
  switch (t) {
    case Type::Boolean:
      return ExprType::Bool;
    case Type::Natural:
    case Type::Integer:
      return ExprType::Int;
    case Type::Rational:
      return ExprType::Rat;
  }
  return ExprType::Int;
}

std::string_view spelling(BinaryOp op) {
  switch (op) {
    case BinaryOp::Add:
      return "+";
    case BinaryOp::Sub:
      return "-";
    case BinaryOp::Mul:
      return "*";
    case BinaryOp::Div:
      return "/";
    case BinaryOp::Mod:
      return "%";
    case BinaryOp::Eq:
      return "=";
    case BinaryOp::Ne:
      return "!=";
    case BinaryOp::Lt:
      return "<";
    case BinaryOp::Le:
      return "<=";
    case BinaryOp::Gt:
      return ">";
    case BinaryOp::Ge:
      return ">=";
    case BinaryOp::And:
      return "&";
    case BinaryOp::Or:
      return "|";
  }
  return "?";
}

std::string format(const Diagnostic& d) {
  return std::to_string(d.pos.line) + ":" + std::to_string(d.pos.column) + ": " + d.message;
}

namespace {

std::string join_messages(const std::vector<Diagnostic>& ds) {
  std::string out;
  for (const auto& d : ds) {
    if (!out.empty()) out += "; ";
    out += format(d);
  }
  return out;
}

}  // namespace

LangError::LangError(ErrorKind kind, std::vector<Diagnostic> diagnostics)
    : std::runtime_error(join_messages(diagnostics)), kind_(kind), diagnostics_(std::move(diagnostics)) {}

LangError::LangError(ErrorKind kind, SourcePos pos, std::string message)
    : LangError(kind, std::vector<Diagnostic>{Diagnostic{pos, std::move(message)}}) {}

ExprPtr make_bool(bool value, SourcePos pos) { return std::make_shared<Expr>(Expr{BoolLit{value}, pos}); }
ExprPtr make_int(mpz_class value, SourcePos pos) {
  return std::make_shared<Expr>(Expr{IntLit{std::move(value)}, pos});
}
ExprPtr make_rat(mpq_class value, SourcePos pos) {
  value.canonicalize();
  return std::make_shared<Expr>(Expr{RatLit{std::move(value)}, pos});
}
ExprPtr make_var(std::string name, SourcePos pos) {
  return std::make_shared<Expr>(Expr{VarRef{std::move(name)}, pos});
}
ExprPtr make_unary(UnaryOp op, ExprPtr operand, SourcePos pos) {
  return std::make_shared<Expr>(Expr{Unary{op, std::move(operand)}, pos});
}
ExprPtr make_binary(BinaryOp op, ExprPtr lhs, ExprPtr rhs, SourcePos pos) {
  return std::make_shared<Expr>(Expr{Binary{op, std::move(lhs), std::move(rhs)}, pos});
}

ExprPtr conjoin(const std::vector<ExprPtr>& parts) {
  if (parts.empty()) return make_bool(true);
  ExprPtr acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = make_binary(BinaryOp::And, acc, parts[i]);
  return acc;
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.node.index() != b.node.index()) return false;
  return std::visit(
      [&](const auto& x) -> bool {
        using T = std::decay_t<decltype(x)>;
        const auto& y = std::get<T>(b.node);
        if constexpr (std::is_same_v<T, BoolLit>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, IntLit> || std::is_same_v<T, RatLit>) {
          return x.value == y.value;
        } else if constexpr (std::is_same_v<T, VarRef>) {
          return x.name == y.name;
        } else if constexpr (std::is_same_v<T, Unary>) {
          return x.op == y.op && structurally_equal(*x.operand, *y.operand);
        } else {
          return x.op == y.op && structurally_equal(*x.lhs, *y.lhs) && structurally_equal(*x.rhs, *y.rhs);
        }
      },
      a.node);
}

std::size_t expr_size(const Expr& e) {
  if (const auto* u = std::get_if<Unary>(&e.node)) return 1 + expr_size(*u->operand);
  if (const auto* b = std::get_if<Binary>(&e.node)) return 1 + expr_size(*b->lhs) + expr_size(*b->rhs);
  return 1;
}

namespace {

void collect_vars(const Expr& e, std::set<std::string>& out) {
  if (const auto* v = std::get_if<VarRef>(&e.node)) {
    out.insert(v->name);
  } else if (const auto* u = std::get_if<Unary>(&e.node)) {
    collect_vars(*u->operand, out);
  } else if (const auto* b = std::get_if<Binary>(&e.node)) {
    collect_vars(*b->lhs, out);
    collect_vars(*b->rhs, out);
  }
}

}  // namespace

std::vector<std::string> free_variables(const Expr& e) {
  std::set<std::string> names;
  collect_vars(e, names);
  return {names.begin(), names.end()};
}

ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& replacements) {
  if (const auto* v = std::get_if<VarRef>(&e->node)) {
    auto it = replacements.find(v->name);
    return it == replacements.end() ? e : it->second;
  }
  if (const auto* u = std::get_if<Unary>(&e->node)) {
    return make_unary(u->op, substitute(u->operand, replacements), e->pos);
  }
  if (const auto* b = std::get_if<Binary>(&e->node)) {
    return make_binary(b->op, substitute(b->lhs, replacements), substitute(b->rhs, replacements), e->pos);
  }
  return e;
}

StmtPtr make_stmt(decltype(Stmt::node) node, SourcePos pos) {
  return std::make_shared<Stmt>(Stmt{std::move(node), pos});
}

StmtPtr make_block(std::vector<StmtPtr> stmts, SourcePos pos) { return make_stmt(Block{std::move(stmts)}, pos); }

StmtPtr clone_stmt(const StmtPtr& s) {
  return std::visit(
      [&](const auto& n) -> StmtPtr {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Block>) {
          std::vector<StmtPtr> copy;
          copy.reserve(n.stmts.size());
          for (const auto& c : n.stmts) copy.push_back(clone_stmt(c));
          return make_block(std::move(copy), s->pos);
        } else if constexpr (std::is_same_v<T, If>) {
          return make_stmt(If{n.cond, clone_stmt(n.then_branch), clone_stmt(n.else_branch)}, s->pos);
        } else if constexpr (std::is_same_v<T, While>) {
          return make_stmt(While{n.annotation, n.test, clone_stmt(n.body)}, s->pos);
        } else {
          return make_stmt(n, s->pos);
        }
      },
      s->node);
}

}  // namespace sipinv::lang

#include <sipinv/lang/pretty.hpp>
#include <sipinv/lang/typecheck.hpp>

#include <set>

namespace sipinv::lang {

namespace {

bool numeric(ExprType t) { return t == ExprType::Int || t == ExprType::Rat; }

[[noreturn]] void type_error(const Expr& e, const std::string& msg) { throw LangError(ErrorKind::Type, e.pos, msg); }

}  // namespace

ExprType infer_type(const Expr& e, const TypeEnv& env) {
  return std::visit(
      [&](const auto& n) -> ExprType {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, BoolLit>) {
          return ExprType::Bool;
        } else if constexpr (std::is_same_v<T, IntLit>) {
          return ExprType::Int;
        } else if constexpr (std::is_same_v<T, RatLit>) {
          return ExprType::Rat;
        } else if constexpr (std::is_same_v<T, VarRef>) {
          auto it = env.find(n.name);
          if (it == env.end()) throw LangError(ErrorKind::UnknownVariable, e.pos, "unknown variable '" + n.name + "'");
          return expr_type_of(it->second);
        } else if constexpr (std::is_same_v<T, Unary>) {
          ExprType t = infer_type(*n.operand, env);
          if (n.op == UnaryOp::Not) {
            if (t != ExprType::Bool) type_error(e, "operand of '!' must be boolean");
            return ExprType::Bool;
          }
          if (!numeric(t)) type_error(e, "operand of unary '-' must be numeric");
          return t;
        } else {
          ExprType l = infer_type(*n.lhs, env);
          ExprType r = infer_type(*n.rhs, env);
          const std::string op(spelling(n.op));
          switch (n.op) {
            case BinaryOp::Add:
            case BinaryOp::Sub:
            case BinaryOp::Mul:
              if (!numeric(l) || !numeric(r)) type_error(e, "operands of '" + op + "' must be numeric");
              return (l == ExprType::Rat || r == ExprType::Rat) ? ExprType::Rat : ExprType::Int;
            case BinaryOp::Div:
              if (!numeric(l) || !numeric(r)) type_error(e, "operands of '/' must be numeric");
              return ExprType::Rat;
            case BinaryOp::Mod:
              if (l != ExprType::Int || r != ExprType::Int) type_error(e, "operands of '%' must be integers");
              return ExprType::Int;
            case BinaryOp::Lt:
            case BinaryOp::Le:
            case BinaryOp::Gt:
            case BinaryOp::Ge:
              if (!numeric(l) || !numeric(r)) type_error(e, "operands of '" + op + "' must be numeric");
              return ExprType::Bool;
            case BinaryOp::Eq:
            case BinaryOp::Ne:
              if (numeric(l) != numeric(r)) type_error(e, "operands of '" + op + "' must have comparable types");
              return ExprType::Bool;
            case BinaryOp::And:
            case BinaryOp::Or:
              if (l != ExprType::Bool || r != ExprType::Bool) type_error(e, "operands of '" + op + "' must be boolean");
              return ExprType::Bool;
          }
          return ExprType::Bool;
        }
      },
      e.node);
}

void require_boolean(const Expr& e, const TypeEnv& env) {
  if (infer_type(e, env) != ExprType::Bool) {
    throw LangError(ErrorKind::NotBoolean, e.pos, "expression must be boolean");
  }
}

bool assignable(Type target, ExprType value) {
  switch (target) {
    case Type::Boolean:
      return value == ExprType::Bool;
    case Type::Natural:
    case Type::Integer:
      return value == ExprType::Int;
    case Type::Rational:
      return value == ExprType::Int || value == ExprType::Rat;
  }
  return false;
}

namespace {

class Checker {
 public:
  explicit Checker(const Program& p) : p_(p) {}

  TypecheckResult run() {
    std::set<std::string> params;
    for (const auto& param : p_.params) params.insert(param.name);

    if (p_.pre) {
      TypeEnv param_env;
      for (const auto& param : p_.params) param_env.emplace(param.name, param.type);
      boolean(*p_.pre, param_env, "precondition");
    }
    boolean(*p_.post, p_.env, "guarantee");

    assigned_ = params;
    declared_ = params;
    for (const auto& s : p_.prelude) stmt(*s, true);

    for (const auto& [name, type] : p_.env) {
      if (!assigned_.count(name)) {
        diags_.push_back({p_.loop_pos, "local '" + name + "' must be assigned before the loop"});
        assigned_.insert(name);
      }
    }
    if (p_.loop_annotation) boolean(*p_.loop_annotation, p_.env, "loop annotation");
    boolean(*p_.test, p_.env, "loop test");
    stmt(*p_.body, false);
    for (const auto& s : p_.epilogue) stmt(*s, false);

    if (!diags_.empty()) return diags_;
    return p_.env;
  }

 private:
  void note(const LangError& err) {
    for (const auto& d : err.diagnostics()) diags_.push_back(d);
  }

  void check_reads(const Expr& e) {
    for (const auto& v : free_variables(e)) {
      if (!declared_.count(v)) {
        diags_.push_back({e.pos, "'" + v + "' is used before it is declared"});
      } else if (!assigned_.count(v)) {
        diags_.push_back({e.pos, "'" + v + "' may be read before it is assigned"});
      }
    }
  }

  std::optional<ExprType> typed(const Expr& e) {
    check_reads(e);
    try {
      return infer_type(e, p_.env);
    } catch (const LangError& err) {
      note(err);
      return std::nullopt;
    }
  }

  void boolean(const Expr& e, const TypeEnv& env, const char* what) {
    try {
      if (infer_type(e, env) != ExprType::Bool) diags_.push_back({e.pos, std::string(what) + " must be boolean"});
    } catch (const LangError& err) {
      note(err);
    }
  }

  void guard(const Expr& e, const char* what) {
    if (auto t = typed(e); t && *t != ExprType::Bool) diags_.push_back({e.pos, std::string(what) + " must be boolean"});
  }

  void target(const std::string& name, SourcePos pos) {
    if (!declared_.count(name)) diags_.push_back({pos, "'" + name + "' is assigned before it is declared"});
  }

  void stmt(const Stmt& s, bool in_prelude) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, VarDecl>) {
            declared_.insert(n.name);
          } else if constexpr (std::is_same_v<T, Assign>) {
            target(n.target, s.pos);
            auto t = typed(*n.value);
            auto it = p_.env.find(n.target);
            if (t && it != p_.env.end() && !assignable(it->second, *t)) {
              diags_.push_back({s.pos, "cannot assign a " + std::string(to_string(*t)) + " value to '" + n.target +
                                           "' of type " + std::string(to_string(it->second))});
            }
            assigned_.insert(n.target);
          } else if constexpr (std::is_same_v<T, Block>) {
            for (const auto& c : n.stmts) stmt(*c, in_prelude);
          } else if constexpr (std::is_same_v<T, If>) {
            guard(*n.cond, "if condition");
            auto before = assigned_;
            stmt(*n.then_branch, in_prelude);
            auto after_then = assigned_;
            assigned_ = before;
            stmt(*n.else_branch, in_prelude);
            std::set<std::string> both;
            for (const auto& v : after_then)
              if (assigned_.count(v)) both.insert(v);
            assigned_ = std::move(both);
          } else if constexpr (std::is_same_v<T, While>) {
            diags_.push_back({s.pos, "unexpected nested loop"});
          } else if constexpr (std::is_same_v<T, Print>) {
            for (const auto& a : n.args) typed(*a);
          } else if constexpr (std::is_same_v<T, Assume>) {
            guard(*n.cond, "assume condition");
          } else if constexpr (std::is_same_v<T, Assert>) {
            guard(*n.cond, n.claim ? "claim condition" : "assert condition");
          } else if constexpr (std::is_same_v<T, CAssign>) {
            for (const auto& t : n.targets) {
              target(t, s.pos);
              assigned_.insert(t);
            }
            guard(*n.constraint, "cassign constraint");
          } else if constexpr (std::is_same_v<T, LoopHeadMark>) {
          }
        },
        s.node);
  }

  const Program& p_;
  std::set<std::string> declared_;
  std::set<std::string> assigned_;
  std::vector<Diagnostic> diags_;
};

}  // namespace

TypecheckResult typecheck(const Program& p) { return Checker(p).run(); }

}  // namespace sipinv::lang

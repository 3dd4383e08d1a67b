#include <sipinv/vcgen/vcgen.hpp>

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace sipinv::vcgen {

using namespace lang;

std::string_view smt_sort(Sort s) {
  switch (s) {
    case Sort::Bool:
      return "Bool";
    case Sort::Int:
      return "Int";
    case Sort::Real:
      return "Real";
  }
  return "?";
}

std::string smt_literal(const mpq_class& q, Sort sort) {
  auto natural = [](const mpz_class& z, bool real) { return z.get_str() + (real ? ".0" : ""); };
  const bool real = sort == Sort::Real;
  mpz_class num = abs(q.get_num());
  std::string body;
  if (q.get_den() == 1) {
    body = natural(num, real);
  } else {
    body = "(/ " + natural(num, true) + " " + natural(q.get_den(), true) + ")";
  }
  return sgn(q) < 0 ? "(- " + body + ")" : body;
}

namespace {

Sort sort_of(Type t) {
  switch (t) {
    case Type::Boolean:
      return Sort::Bool;
    case Type::Rational:
      return Sort::Real;
    default:
      return Sort::Int;
  }
}

struct Term {
  std::string text;
  Sort sort;
};

std::string as_real(const Term& t) { return t.sort == Sort::Real ? t.text : "(to_real " + t.text + ")"; }

std::string conj(const std::string& a, const std::string& b) {
  if (a == "true") return b;
  if (b == "true") return a;
  return "(and " + a + " " + b + ")";
}

std::string implies(const std::string& path, const std::string& cond) {
  if (path == "true") return cond;
  return "(=> " + path + " " + cond + ")";
}

class SymbolicExecutor {
 public:
  explicit SymbolicExecutor(const Goal& g) : g_(g) {
    f_.env = g.env;
    for (const auto& [name, type] : g.env) {
      std::string c = fresh(name, type);
      f_.inputs.emplace(name, c);
      current_.emplace(name, c);
    }
  }

  Formula run() {
    for (const auto& s : g_.stmts) exec(*s, "true");
    return std::move(f_);
  }

 private:
  std::string fresh(const std::string& var, Type type) {
    std::string c = var + "@" + std::to_string(next_version_[var]++);
    f_.declarations.emplace_back(c, sort_of(type));
    if (type == Type::Natural) f_.type_constraints.push_back("(>= " + c + " 0)");
    return c;
  }

  Term eval(const Expr& e, std::vector<std::string>& guards) {
    return std::visit(
        [&](const auto& n) -> Term {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, BoolLit>) {
            return {n.value ? "true" : "false", Sort::Bool};
          } else if constexpr (std::is_same_v<T, IntLit>) {
            return {smt_literal(mpq_class(n.value), Sort::Int), Sort::Int};
          } else if constexpr (std::is_same_v<T, RatLit>) {
            return {smt_literal(n.value, Sort::Real), Sort::Real};
          } else if constexpr (std::is_same_v<T, VarRef>) {
            auto it = current_.find(n.name);
            if (it == current_.end()) throw std::invalid_argument("goal mentions undeclared variable '" + n.name + "'");
            return {it->second, sort_of(g_.env.at(n.name))};
          } else if constexpr (std::is_same_v<T, Unary>) {
            Term t = eval(*n.operand, guards);
            if (n.op == UnaryOp::Not) return {"(not " + t.text + ")", Sort::Bool};
            return {"(- " + t.text + ")", t.sort};
          } else {
            Term l = eval(*n.lhs, guards);
            Term r = eval(*n.rhs, guards);
            const bool real = l.sort == Sort::Real || r.sort == Sort::Real;
            auto arith = [&](const char* op) -> Term {
              if (real) return {"(" + std::string(op) + " " + as_real(l) + " " + as_real(r) + ")", Sort::Real};
              return {"(" + std::string(op) + " " + l.text + " " + r.text + ")", Sort::Int};
            };
            auto compare = [&](const char* op) -> Term {
              if (l.sort == Sort::Bool) return {"(" + std::string(op) + " " + l.text + " " + r.text + ")", Sort::Bool};
              Term t = arith(op);
              t.sort = Sort::Bool;
              return t;
            };
            switch (n.op) {
              case BinaryOp::Add:
                return arith("+");
              case BinaryOp::Sub:
                return arith("-");
              case BinaryOp::Mul:
                return arith("*");
              case BinaryOp::Div:
                guards.push_back("(not (= " + r.text + " " + (r.sort == Sort::Real ? "0.0" : "0") + "))");
                return {"(/ " + as_real(l) + " " + as_real(r) + ")", Sort::Real};
              case BinaryOp::Mod:
                guards.push_back("(> " + r.text + " 0)");
                return {"(mod " + l.text + " " + r.text + ")", Sort::Int};
              case BinaryOp::Eq:
                return compare("=");
              case BinaryOp::Ne: {
                Term t = compare("=");
                return {"(not " + t.text + ")", Sort::Bool};
              }
              case BinaryOp::Lt:
                return compare("<");
              case BinaryOp::Le:
                return compare("<=");
              case BinaryOp::Gt:
                return compare(">");
              case BinaryOp::Ge:
                return compare(">=");
              case BinaryOp::And:
                return {"(and " + l.text + " " + r.text + ")", Sort::Bool};
              case BinaryOp::Or:
                return {"(or " + l.text + " " + r.text + ")", Sort::Bool};
            }
            throw std::logic_error("unhandled operator");
          }
        },
        e.node);
  }

  void oblige(const std::string& path, const std::string& cond) {
    f_.obligations.push_back({f_.assumptions.size(), path, cond});
  }

  void oblige_all(const std::string& path, const std::vector<std::string>& guards) {
    for (const auto& gd : guards) oblige(path, gd);
  }

  Term checked(const Expr& e, const std::string& path) {
    std::vector<std::string> guards;
    Term t = eval(e, guards);
    oblige_all(path, guards);
    return t;
  }

  void assign(const std::string& var, const Term& value, const std::string& path) {
    const Type type = g_.env.at(var);
    if (type == Type::Natural) oblige(path, "(>= " + value.text + " 0)");
    const std::string rhs = (type == Type::Rational) ? as_real(value) : value.text;
    std::string c = fresh(var, type);
    // The natural bound on `c` would hide the underflow obligation above.
    if (type == Type::Natural) f_.type_constraints.pop_back();
    f_.definitions.push_back("(= " + c + " " + rhs + ")");
    current_[var] = c;
  }

  void exec(const Stmt& s, const std::string& path) {
    std::visit(
        [&](const auto& n) {
          using T = std::decay_t<decltype(n)>;
          if constexpr (std::is_same_v<T, VarDecl>) {
            Term d;
            d.sort = sort_of(n.type);
            d.text = n.type == Type::Boolean ? "false" : (n.type == Type::Rational ? "0.0" : "0");
            assign(n.name, d, path);
          } else if constexpr (std::is_same_v<T, Assign>) {
            assign(n.target, checked(*n.value, path), path);
          } else if constexpr (std::is_same_v<T, Block>) {
            for (const auto& c : n.stmts) exec(*c, path);
          } else if constexpr (std::is_same_v<T, If>) {
            const std::string c = checked(*n.cond, path).text;
            const auto before = current_;
            exec(*n.then_branch, conj(path, c));
            const auto after_then = current_;
            current_ = before;
            exec(*n.else_branch, conj(path, "(not " + c + ")"));
            for (auto& [var, else_name] : current_) {
              const std::string& then_name = after_then.at(var);
              if (then_name == else_name) continue;
              const Type type = g_.env.at(var);
              std::string merged = fresh(var, type);
              if (type == Type::Natural) f_.type_constraints.pop_back();
              f_.definitions.push_back("(= " + merged + " (ite " + c + " " + then_name + " " + else_name + "))");
              else_name = merged;
            }
          } else if constexpr (std::is_same_v<T, While>) {
            throw std::invalid_argument("goal contains a loop");
          } else if constexpr (std::is_same_v<T, Print>) {
          } else if constexpr (std::is_same_v<T, Assume>) {
            const std::string c = checked(*n.cond, path).text;
            f_.assumptions.push_back(implies(path, c));
          } else if constexpr (std::is_same_v<T, Assert>) {
            const std::string c = checked(*n.cond, path).text;
            oblige(path, c);
          } else if constexpr (std::is_same_v<T, CAssign>) {
            std::vector<std::string> names;
            for (const auto& t : n.targets) {
              std::string c = fresh(t, g_.env.at(t));
              current_[t] = c;
              names.push_back(c);
            }
            f_.cassign_names.push_back(std::move(names));
            std::vector<std::string> guards;
            std::string c = eval(*n.constraint, guards).text;
            for (const auto& gd : guards) c = conj(gd, c);
            f_.assumptions.push_back(implies(path, c));
          } else if constexpr (std::is_same_v<T, LoopHeadMark>) {
          }
        },
        s.node);
  }

  const Goal& g_;
  Formula f_;
  std::map<std::string, std::string> current_;
  std::map<std::string, int> next_version_;
};

}  // namespace

Formula symexec_to_vc(const Goal& g) {
  for (const auto& [name, _] : g.env) {
    if (name.find('@') != std::string::npos) throw std::invalid_argument("variable names may not contain '@'");
  }
  return SymbolicExecutor(g).run();
}

std::string Formula::violation() const {
  if (obligations.empty()) return "false";
  std::vector<std::string> prefix{"true"};
  for (const auto& a : assumptions) prefix.push_back(conj(prefix.back(), a));
  std::ostringstream os;
  os << "(or";
  for (const auto& o : obligations) {
    os << " " << conj(conj(prefix[o.assumptions_before], o.path), "(not " + o.condition + ")");
  }
  os << " false)";
  return os.str();
}

std::string Formula::to_smtlib(std::optional<double> timeout_seconds) const {
  std::ostringstream os;
  if (timeout_seconds) {
    os << "(set-option :timeout " << std::max(1LL, static_cast<long long>(*timeout_seconds * 1000.0 + 0.5)) << ")\n";
  }
  for (const auto& [name, sort] : declarations) os << "(declare-const " << name << " " << smt_sort(sort) << ")\n";
  for (const auto& c : type_constraints) os << "(assert " << c << ")\n";
  for (const auto& d : definitions) os << "(assert " << d << ")\n";
  os << "(assert " << violation() << ")\n";
  os << "(check-sat)\n(get-model)\n";
  return os.str();
}

}  // namespace sipinv::vcgen

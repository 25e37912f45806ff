#pragma once

#include <sstream>
#include <string>

#include "dlecorr/syntax.hpp"

namespace dlecorr {

namespace detail {

inline bool is_infix_name(const std::string& n) { return n == "->" || n == "<-" || n == ">-" || n == "-<"; }

inline std::string conn_display(const Connective* c) { return c->display.empty() ? c->name : c->display; }

inline bool atomic_term(const Term& t) {
  switch (t->kind) {
    case TermKind::PropVar:
    case TermKind::Nominal:
    case TermKind::Conominal:
    case TermKind::Top:
    case TermKind::Bot:
    case TermKind::Kappa:
    case TermKind::Lambda:
    case TermKind::Hole:
      return true;
    case TermKind::App:
      return !is_infix_name(conn_display(t->conn));
    default:
      return false;
  }
}

inline void print_term(std::ostream& os, const Term& t);

inline void print_arg(std::ostream& os, const Term& t) {
  if (atomic_term(t)) {
    print_term(os, t);
  } else {
    os << '(';
    print_term(os, t);
    os << ')';
  }
}

inline void print_term(std::ostream& os, const Term& t) {
  switch (t->kind) {
    case TermKind::PropVar:
      os << t->name;
      return;
    case TermKind::Nominal:
      os << '#' << t->name;
      return;
    case TermKind::Conominal:
      os << '*' << t->name;
      return;
    case TermKind::Top:
      os << "top";
      return;
    case TermKind::Bot:
      os << "bot";
      return;
    case TermKind::Hole:
      os << "!" << t->hole;
      return;
    case TermKind::Meet:
      print_arg(os, t->args[0]);
      os << " /\\ ";
      print_arg(os, t->args[1]);
      return;
    case TermKind::Join:
      print_arg(os, t->args[0]);
      os << " \\/ ";
      print_arg(os, t->args[1]);
      return;
    case TermKind::Kappa:
      os << "k(";
      print_term(os, t->args[0]);
      os << ')';
      return;
    case TermKind::Lambda:
      os << "l(";
      print_term(os, t->args[0]);
      os << ')';
      return;
    case TermKind::App:
      if (is_infix_name(conn_display(t->conn))) {
        print_arg(os, t->args[0]);
        os << ' ' << conn_display(t->conn) << ' ';
        print_arg(os, t->args[1]);
        return;
      }
      os << t->conn->name;
      if (t->conn->arity > 0) {
        os << '(';
        for (size_t i = 0; i < t->args.size(); ++i) {
          if (i) os << ", ";
          print_term(os, t->args[i]);
        }
        os << ')';
      }
      return;
  }
}

inline void print_meta(std::ostream& os, const Meta& m);

inline bool atomic_meta(const Meta& m) { return m->kind == MetaKind::Ineq || m->kind == MetaKind::NegIneq; }

inline void print_meta_arg(std::ostream& os, const Meta& m) {
  if (atomic_meta(m)) {
    print_meta(os, m);
  } else {
    os << '(';
    print_meta(os, m);
    os << ')';
  }
}

inline void print_meta(std::ostream& os, const Meta& m) {
  switch (m->kind) {
    case MetaKind::Ineq:
      print_term(os, m->ineq.lhs);
      os << " <= ";
      print_term(os, m->ineq.rhs);
      return;
    case MetaKind::NegIneq:
      print_term(os, m->ineq.lhs);
      os << " !<= ";
      print_term(os, m->ineq.rhs);
      return;
    case MetaKind::MAnd:
      for (size_t i = 0; i < m->kids.size(); ++i) {
        if (i) os << " && ";
        print_meta_arg(os, m->kids[i]);
      }
      return;
    case MetaKind::MOr:
      for (size_t i = 0; i < m->kids.size(); ++i) {
        if (i) os << " || ";
        print_meta_arg(os, m->kids[i]);
      }
      return;
    case MetaKind::MNot:
      os << "~~";
      print_meta_arg(os, m->kids[0]);
      return;
    case MetaKind::MImp:
      print_meta_arg(os, m->kids[0]);
      os << " ==> ";
      print_meta_arg(os, m->kids[1]);
      return;
    case MetaKind::Forall:
    case MetaKind::Exists:
      os << (m->kind == MetaKind::Forall ? 'A' : 'E') << ' ' << m->var << ':'
         << (m->sort == VarSort::Nominal ? "nom" : "conom") << ". ";
      print_meta_arg(os, m->body);
      return;
    case MetaKind::RForall:
    case MetaKind::RExists:
      os << (m->kind == MetaKind::RForall ? 'A' : 'E') << '[';
      for (size_t i = 0; i < m->rvars.size(); ++i) {
        if (i) os << ',';
        os << m->rvars[i];
      }
      os << " >" << m->rconn->name << ' ';
      print_term(os, m->restrictor);
      os << "]. ";
      print_meta_arg(os, m->body);
      return;
  }
}

}  // namespace detail

inline std::string print(const Term& t) {
  std::ostringstream os;
  detail::print_term(os, t);
  return os.str();
}

inline std::string print(const Inequality& i) {
  std::ostringstream os;
  detail::print_term(os, i.lhs);
  os << " <= ";
  detail::print_term(os, i.rhs);
  return os.str();
}

inline std::string print(const Meta& m) {
  std::ostringstream os;
  detail::print_meta(os, m);
  return os.str();
}

}  // namespace dlecorr

#pragma once

#include <istream>
#include <ostream>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <string>

#include "scrl/diff/mlp.hpp"
#include "scrl/diff/policy.hpp"
#include "scrl/num_format.hpp"

namespace scrl::diff {

// Text checkpoint sections.  Values are printed with %.17g, which round-trips
// IEEE doubles exactly, so a load restores bitwise-identical behavior.
//
//   vec <name> <n>
//   <n> lines, one value each
//   mlp <name> <k> <size_0> ... <size_{k-1}>
//   <param_count> lines, one value each
//
// Readers are strict: a wrong keyword, name, or count raises with the
// offending token in the message.

inline void write_vector(std::ostream& os, const std::string& name,
                         const VectorXd& v) {
  os << "vec " << name << ' ' << v.size() << '\n';
  for (Eigen::Index i = 0; i < v.size(); ++i)
    os << format_double(v[i]) << '\n';
}

namespace detail {

[[noreturn]] inline void checkpoint_fail(const std::string& what) {
  throw std::runtime_error("checkpoint: " + what);
}

inline std::string expect_token(std::istream& is, const char* context) {
  std::string tok;
  if (!(is >> tok)) checkpoint_fail(std::string("truncated before ") + context);
  return tok;
}

inline void expect_keyword(std::istream& is, const std::string& keyword,
                           const std::string& name) {
  const std::string kw = expect_token(is, "section keyword");
  if (kw != keyword)
    checkpoint_fail("expected '" + keyword + "', found '" + kw + "'");
  const std::string found = expect_token(is, "section name");
  if (found != name)
    checkpoint_fail("expected section '" + name + "', found '" + found + "'");
}

inline double read_value(std::istream& is) {
  const std::string tok = expect_token(is, "value");
  // strtod instead of stod: stod throws on ERANGE, which glibc also sets for
  // denormals that nevertheless parse exactly (and must round-trip here).
  const char* begin = tok.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end != begin + tok.size()) checkpoint_fail("bad value '" + tok + "'");
  return v;
}

inline long read_count(std::istream& is, const char* context) {
  const std::string tok = expect_token(is, context);
  std::size_t pos = 0;
  long n = 0;
  try {
    n = std::stol(tok, &pos);
  } catch (const std::exception&) {
    checkpoint_fail(std::string("bad count '") + tok + "' for " + context);
  }
  if (pos != tok.size() || n < 0)
    checkpoint_fail(std::string("bad count '") + tok + "' for " + context);
  return n;
}

}  // namespace detail

inline VectorXd read_vector(std::istream& is, const std::string& name) {
  detail::expect_keyword(is, "vec", name);
  const long n = detail::read_count(is, "vector length");
  VectorXd v(n);
  for (long i = 0; i < n; ++i) v[i] = detail::read_value(is);
  return v;
}

inline void write_mlp(std::ostream& os, const std::string& name,
                      const Mlp& net) {
  os << "mlp " << name << ' ' << net.layer_sizes.size();
  for (int s : net.layer_sizes) os << ' ' << s;
  os << '\n';
  for (Eigen::Index i = 0; i < net.params.size(); ++i)
    os << format_double(net.params[i]) << '\n';
}

inline Mlp read_mlp(std::istream& is, const std::string& name) {
  detail::expect_keyword(is, "mlp", name);
  const long k = detail::read_count(is, "layer count");
  if (k < 2) detail::checkpoint_fail("mlp needs at least 2 layer sizes");
  Mlp net;
  net.layer_sizes.resize(k);
  for (long i = 0; i < k; ++i)
    net.layer_sizes[i] = static_cast<int>(detail::read_count(is, "layer size"));
  const int count = Mlp::param_count(net.layer_sizes);
  net.params.resize(count);
  for (int i = 0; i < count; ++i) net.params[i] = detail::read_value(is);
  net.validate();
  return net;
}

inline void write_policy(std::ostream& os, const std::string& name,
                         const GaussianTanhPolicy& pol) {
  os << "policy " << name << ' ' << pol.action_dim << '\n';
  write_mlp(os, name + ".trunk", pol.trunk);
}

inline GaussianTanhPolicy read_policy(std::istream& is,
                                      const std::string& name) {
  detail::expect_keyword(is, "policy", name);
  GaussianTanhPolicy pol;
  pol.action_dim = static_cast<int>(detail::read_count(is, "action dim"));
  pol.trunk = read_mlp(is, name + ".trunk");
  pol.validate();
  return pol;
}

}  // namespace scrl::diff

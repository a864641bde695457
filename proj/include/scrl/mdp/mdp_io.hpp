#pragma once

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scrl/mdp/finite_mdp.hpp"
#include "scrl/num_format.hpp"

namespace scrl {

// Error in an MDP description file; what() carries "source:line: message".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, int line, const std::string& message)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + message),
        line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

namespace detail {

inline std::vector<std::string> tokenize(const std::string& line) {
  std::istringstream iss(line);
  std::vector<std::string> tokens;
  std::string tok;
  while (iss >> tok) tokens.push_back(tok);
  return tokens;
}

inline long parse_int(const std::string& tok, const std::string& source,
                      int line, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long value = std::stol(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return value;
  } catch (const std::exception&) {
    throw ParseError(source, line, "expected integer for " + what + ", got '" + tok + "'");
  }
}

inline double parse_real(const std::string& tok, const std::string& source,
                         int line, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double value = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return value;
  } catch (const std::exception&) {
    throw ParseError(source, line, "expected number for " + what + ", got '" + tok + "'");
  }
}

inline int parse_index(const std::string& tok, long limit, const std::string& source,
                       int line, const std::string& what) {
  const long value = parse_int(tok, source, line, what);
  if (value < 0 || value >= limit)
    throw ParseError(source, line,
                     what + " " + tok + " out of range [0, " + std::to_string(limit) + ")");
  return static_cast<int>(value);
}

}  // namespace detail

// Parses the MDP description grammar:
//
//   states N actions M gamma G dim D     (header, first content line)
//   embed s x1 .. xD                     (exactly one per state)
//   r s a value                          (omitted rewards are 0)
//   p s a s' prob                        (omitted transitions are 0)
//
// Blank lines and lines starting with '#' are skipped.  State and action
// indices are 0-based.  Throws ParseError with the offending line number;
// semantic problems (rows not summing to 1, ...) surface from validate() as
// std::invalid_argument.
inline FiniteMdp parse_mdp(std::istream& in, const std::string& source = "<stream>") {
  FiniteMdp mdp;
  std::vector<bool> embedded;
  std::vector<std::vector<bool>> reward_seen;
  std::vector<std::vector<bool>> prob_seen;
  bool header_done = false;

  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto tokens = detail::tokenize(line);
    if (tokens.empty() || tokens[0][0] == '#') continue;

    if (!header_done) {
      if (tokens.size() != 8 || tokens[0] != "states" || tokens[2] != "actions" ||
          tokens[4] != "gamma" || tokens[6] != "dim")
        throw ParseError(source, line_no,
                         "expected header 'states N actions M gamma G dim D'");
      const long n_states = detail::parse_int(tokens[1], source, line_no, "states");
      const long n_actions = detail::parse_int(tokens[3], source, line_no, "actions");
      const long dim = detail::parse_int(tokens[7], source, line_no, "dim");
      if (n_states < 1 || n_actions < 1 || dim < 1)
        throw ParseError(source, line_no, "states, actions, and dim must be >= 1");
      mdp.n_states = static_cast<int>(n_states);
      mdp.n_actions = static_cast<int>(n_actions);
      mdp.gamma = detail::parse_real(tokens[5], source, line_no, "gamma");
      mdp.reward.setZero(mdp.n_states, mdp.n_actions);
      mdp.transition.setZero(static_cast<Eigen::Index>(mdp.n_states) * mdp.n_actions,
                             mdp.n_states);
      mdp.embedding.setZero(mdp.n_states, dim);
      embedded.assign(mdp.n_states, false);
      reward_seen.assign(mdp.n_states, std::vector<bool>(mdp.n_actions, false));
      prob_seen.assign(static_cast<std::size_t>(mdp.n_states) * mdp.n_actions,
                       std::vector<bool>(mdp.n_states, false));
      header_done = true;
      continue;
    }

    if (tokens[0] == "embed") {
      if (tokens.size() != 2 + static_cast<std::size_t>(mdp.embed_dim()))
        throw ParseError(source, line_no,
                         "embed needs a state index and exactly " +
                             std::to_string(mdp.embed_dim()) + " coordinates");
      const int s = detail::parse_index(tokens[1], mdp.n_states, source, line_no, "state");
      if (embedded[s])
        throw ParseError(source, line_no,
                         "duplicate embed line for state " + std::to_string(s));
      embedded[s] = true;
      for (int d = 0; d < mdp.embed_dim(); ++d)
        mdp.embedding(s, d) =
            detail::parse_real(tokens[2 + d], source, line_no, "coordinate");
    } else if (tokens[0] == "r") {
      if (tokens.size() != 4)
        throw ParseError(source, line_no, "reward line must be 'r s a value'");
      const int s = detail::parse_index(tokens[1], mdp.n_states, source, line_no, "state");
      const int a = detail::parse_index(tokens[2], mdp.n_actions, source, line_no, "action");
      if (reward_seen[s][a])
        throw ParseError(source, line_no,
                         "duplicate reward for (s=" + std::to_string(s) +
                             ", a=" + std::to_string(a) + ")");
      reward_seen[s][a] = true;
      mdp.reward(s, a) = detail::parse_real(tokens[3], source, line_no, "reward");
    } else if (tokens[0] == "p") {
      if (tokens.size() != 5)
        throw ParseError(source, line_no, "transition line must be 'p s a s' prob'");
      const int s = detail::parse_index(tokens[1], mdp.n_states, source, line_no, "state");
      const int a = detail::parse_index(tokens[2], mdp.n_actions, source, line_no, "action");
      const int t = detail::parse_index(tokens[3], mdp.n_states, source, line_no, "next state");
      const double prob = detail::parse_real(tokens[4], source, line_no, "probability");
      if (prob < 0.0 || prob > 1.0)
        throw ParseError(source, line_no, "probability must lie in [0, 1]");
      const std::size_t row = static_cast<std::size_t>(mdp.row(s, a));
      if (prob_seen[row][t])
        throw ParseError(source, line_no,
                         "duplicate transition (s=" + std::to_string(s) +
                             ", a=" + std::to_string(a) + ", s'=" + std::to_string(t) + ")");
      prob_seen[row][t] = true;
      mdp.transition(static_cast<Eigen::Index>(row), t) = prob;
    } else {
      throw ParseError(source, line_no, "unknown directive '" + tokens[0] + "'");
    }
  }

  if (!header_done) throw ParseError(source, 1, "missing header line");
  for (int s = 0; s < mdp.n_states; ++s)
    if (!embedded[s])
      throw ParseError(source, line_no,
                       "missing embed line for state " + std::to_string(s));
  mdp.validate();
  return mdp;
}

inline FiniteMdp load_mdp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open MDP file: " + path);
  return parse_mdp(in, path);
}

inline void write_values_csv(std::ostream& out, const QTable& q) {
  out << "state,action,value\n";
  for (Eigen::Index s = 0; s < q.rows(); ++s)
    for (Eigen::Index a = 0; a < q.cols(); ++a)
      out << s << ',' << a << ',' << format_double(q(s, a)) << '\n';
}

inline void write_policy_csv(std::ostream& out, const TabularPolicy& policy) {
  out << "state,action,prob\n";
  for (Eigen::Index s = 0; s < policy.rows(); ++s)
    for (Eigen::Index a = 0; a < policy.cols(); ++a)
      out << s << ',' << a << ',' << format_double(policy(s, a)) << '\n';
}

}  // namespace scrl

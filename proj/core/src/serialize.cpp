#include "lorl/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace lorl {

std::string format_double(double v) {
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

struct LineReader {
  std::istream& is;
  int lineno = 0;

  bool next(std::string& line) {
    while (std::getline(is, line)) {
      ++lineno;
      if (!line.empty() && line[0] != '#') return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("line " + std::to_string(lineno) + ": " + what);
  }
};

double parse_double(LineReader& r, std::istringstream& is) {
  std::string tok;
  if (!(is >> tok)) r.fail("expected a number");
  try {
    return std::stod(tok);
  } catch (const std::exception&) {
    r.fail("bad number: " + tok);
  }
}

long parse_long(LineReader& r, std::istringstream& is) {
  std::string tok;
  if (!(is >> tok)) r.fail("expected an integer");
  try {
    return std::stol(tok);
  } catch (const std::exception&) {
    r.fail("bad integer: " + tok);
  }
}

void expect(LineReader& r, std::istringstream& is, const char* word) {
  std::string tok;
  if (!(is >> tok) || tok != word) r.fail(std::string("expected '") + word + "'");
}

}  // namespace

void write_mdp(std::ostream& os, const FeatureMdp& mdp) {
  os << "mdp v1\n";
  os << "H " << mdp.horizon << " d " << mdp.dim << " states " << mdp.num_states << " actions "
     << mdp.num_actions << " initial " << mdp.initial_state << '\n';
  for (int x = 0; x < static_cast<int>(mdp.state_names.size()); ++x)
    if (!mdp.state_names[x].empty()) os << "name " << x << ' ' << mdp.state_names[x] << '\n';
  for (int h = 0; h < static_cast<int>(mdp.active.size()); ++h) {
    if (mdp.active[h].empty()) continue;
    os << "active " << h + 1;
    for (int x : mdp.active[h]) os << ' ' << x;
    os << '\n';
  }
  for (int h = 0; h < mdp.horizon; ++h) {
    os << "features " << h + 1 << '\n';
    for (int x = 0; x < mdp.num_states; ++x)
      for (int a = 0; a < mdp.num_actions; ++a) {
        os << x << ' ' << a;
        for (int j = 0; j < mdp.dim; ++j) os << ' ' << format_double(mdp.features[h](mdp.row(x, a), j));
        os << '\n';
      }
    os << "transitions " << h + 1 << '\n';
    for (int x = 0; x < mdp.num_states; ++x)
      for (int a = 0; a < mdp.num_actions; ++a) {
        os << x << ' ' << a;
        for (int y = 0; y < mdp.num_states; ++y)
          os << ' ' << format_double(mdp.transitions[h](mdp.row(x, a), y));
        os << '\n';
      }
    os << "rewards " << h + 1;
    for (int j = 0; j < mdp.dim; ++j) os << ' ' << format_double(mdp.reward_coeffs[h][j]);
    os << '\n';
  }
  os << "end\n";
}

FeatureMdp read_mdp(std::istream& is) {
  LineReader reader{is};
  std::string line;
  if (!reader.next(line) || line != "mdp v1") reader.fail("expected 'mdp v1' header");
  if (!reader.next(line)) reader.fail("missing dimension line");
  FeatureMdp mdp;
  {
    std::istringstream hdr(line);
    expect(reader, hdr, "H");
    mdp.horizon = static_cast<int>(parse_long(reader, hdr));
    expect(reader, hdr, "d");
    mdp.dim = static_cast<int>(parse_long(reader, hdr));
    expect(reader, hdr, "states");
    mdp.num_states = static_cast<int>(parse_long(reader, hdr));
    expect(reader, hdr, "actions");
    mdp.num_actions = static_cast<int>(parse_long(reader, hdr));
    expect(reader, hdr, "initial");
    mdp.initial_state = static_cast<int>(parse_long(reader, hdr));
  }
  if (mdp.horizon <= 0 || mdp.dim <= 0 || mdp.num_states <= 0 || mdp.num_actions <= 0)
    reader.fail("nonpositive dimensions");
  const int rows = mdp.num_states * mdp.num_actions;
  mdp.features.assign(mdp.horizon, Eigen::MatrixXd::Zero(rows, mdp.dim));
  mdp.transitions.assign(mdp.horizon, Eigen::MatrixXd::Zero(rows, mdp.num_states));
  mdp.reward_coeffs.assign(mdp.horizon, Eigen::VectorXd::Zero(mdp.dim));
  mdp.active.assign(mdp.horizon, {});
  mdp.state_names.assign(mdp.num_states, "");

  auto read_block_rows = [&](Eigen::MatrixXd& block, int cols) {
    for (int k = 0; k < rows; ++k) {
      if (!reader.next(line)) reader.fail("unexpected end of block");
      std::istringstream row(line);
      int x = static_cast<int>(parse_long(reader, row));
      int a = static_cast<int>(parse_long(reader, row));
      if (x < 0 || x >= mdp.num_states || a < 0 || a >= mdp.num_actions)
        reader.fail("state/action out of range");
      for (int j = 0; j < cols; ++j) block(mdp.row(x, a), j) = parse_double(reader, row);
    }
  };

  while (reader.next(line)) {
    if (line == "end") {
      mdp.validate();
      return mdp;
    }
    std::istringstream head(line);
    std::string kind;
    head >> kind;
    if (kind == "name") {
      int x = static_cast<int>(parse_long(reader, head));
      if (x < 0 || x >= mdp.num_states) reader.fail("name: state out of range");
      head >> mdp.state_names[x];
    } else if (kind == "active") {
      int h = static_cast<int>(parse_long(reader, head)) - 1;
      if (h < 0 || h >= mdp.horizon) reader.fail("active: step out of range");
      long x;
      std::string tok;
      while (head >> tok) {
        x = std::stol(tok);
        if (x < 0 || x >= mdp.num_states) reader.fail("active: state out of range");
        mdp.active[h].push_back(static_cast<int>(x));
      }
    } else if (kind == "features" || kind == "transitions") {
      int h = static_cast<int>(parse_long(reader, head)) - 1;
      if (h < 0 || h >= mdp.horizon) reader.fail(kind + ": step out of range");
      if (kind == "features")
        read_block_rows(mdp.features[h], mdp.dim);
      else
        read_block_rows(mdp.transitions[h], mdp.num_states);
    } else if (kind == "rewards") {
      int h = static_cast<int>(parse_long(reader, head)) - 1;
      if (h < 0 || h >= mdp.horizon) reader.fail("rewards: step out of range");
      for (int j = 0; j < mdp.dim; ++j) mdp.reward_coeffs[h][j] = parse_double(reader, head);
    } else {
      reader.fail("unknown block: " + kind);
    }
  }
  reader.fail("missing 'end'");
}

void write_policy(std::ostream& os, const Policy& policy, int num_states, int num_actions,
                  int dim) {
  os << "policy v1\n";
  os << "H " << policy.horizon() << " d " << dim << " states " << num_states << " actions "
     << num_actions << '\n';
  for (int h = 0; h < policy.horizon(); ++h) {
    const StepPolicy& step = policy.steps[h];
    if (const auto* pl = std::get_if<PerturbedLinear>(&step)) {
      os << "step " << h + 1 << " plinear";
      for (int j = 0; j < pl->w.size(); ++j) os << ' ' << format_double(pl->w[j]);
      os << " sigma " << format_double(pl->sigma) << '\n';
    } else if (const auto* sm = std::get_if<SoftmaxPolicy>(&step)) {
      os << "step " << h + 1 << " softmax";
      for (int j = 0; j < sm->w.size(); ++j) os << ' ' << format_double(sm->w[j]);
      os << " eta " << format_double(sm->eta) << '\n';
    } else {
      const auto& tab = std::get<TabularPolicy>(step);
      os << "step " << h + 1 << " tabular\n";
      for (int x = 0; x < tab.probs.rows(); ++x) {
        os << x;
        for (int a = 0; a < tab.probs.cols(); ++a) os << ' ' << format_double(tab.probs(x, a));
        os << '\n';
      }
    }
  }
  os << "end\n";
}

Policy read_policy(std::istream& is) {
  LineReader reader{is};
  std::string line;
  if (!reader.next(line) || line != "policy v1") reader.fail("expected 'policy v1' header");
  if (!reader.next(line)) reader.fail("missing dimension line");
  int H, d, X, A;
  {
    std::istringstream hdr(line);
    expect(reader, hdr, "H");
    H = static_cast<int>(parse_long(reader, hdr));
    expect(reader, hdr, "d");
    d = static_cast<int>(parse_long(reader, hdr));
    expect(reader, hdr, "states");
    X = static_cast<int>(parse_long(reader, hdr));
    expect(reader, hdr, "actions");
    A = static_cast<int>(parse_long(reader, hdr));
  }
  Policy policy;
  policy.steps.resize(H, PerturbedLinear{Eigen::VectorXd::Zero(d), 0.0});
  std::vector<bool> seen(H, false);
  while (reader.next(line)) {
    if (line == "end") {
      for (int h = 0; h < H; ++h)
        if (!seen[h]) reader.fail("policy: missing step " + std::to_string(h + 1));
      return policy;
    }
    std::istringstream head(line);
    expect(reader, head, "step");
    int h = static_cast<int>(parse_long(reader, head)) - 1;
    if (h < 0 || h >= H) reader.fail("step out of range");
    std::string kind;
    head >> kind;
    if (kind == "plinear" || kind == "softmax") {
      Eigen::VectorXd w(d);
      for (int j = 0; j < d; ++j) w[j] = parse_double(reader, head);
      std::string key;
      head >> key;
      double scale = parse_double(reader, head);
      if (kind == "plinear") {
        if (key != "sigma") reader.fail("expected 'sigma'");
        policy.steps[h] = PerturbedLinear{std::move(w), scale};
      } else {
        if (key != "eta") reader.fail("expected 'eta'");
        policy.steps[h] = SoftmaxPolicy{std::move(w), scale};
      }
    } else if (kind == "tabular") {
      Eigen::MatrixXd rows(X, A);
      for (int k = 0; k < X; ++k) {
        if (!reader.next(line)) reader.fail("tabular block truncated");
        std::istringstream row(line);
        int x = static_cast<int>(parse_long(reader, row));
        if (x < 0 || x >= X) reader.fail("tabular: state out of range");
        for (int a = 0; a < A; ++a) rows(x, a) = parse_double(reader, row);
      }
      policy.steps[h] = TabularPolicy{std::move(rows)};
    } else {
      reader.fail("unknown step kind: " + kind);
    }
    seen[h] = true;
  }
  reader.fail("missing 'end'");
}

}  // namespace lorl

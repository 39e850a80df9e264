#include "ssmsel/model_io.hpp"

#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>

namespace ssmsel {

namespace {

std::string strip_comment(const std::string& line) {
  auto pos = line.find('#');
  return pos == std::string::npos ? line : line.substr(0, pos);
}

bool is_section(const std::string& word) {
  return word == "M" || word == "C" || word == "K" || word == "QUAD" || word == "CUBIC" ||
         word == "FORCE";
}

// Tokenizer that remembers line numbers for error messages.
class Tokens {
 public:
  explicit Tokens(std::istream& in) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::istringstream ls(strip_comment(line));
      std::vector<std::string> row;
      std::string tok;
      while (ls >> tok) row.push_back(tok);
      if (!row.empty()) lines_.push_back({lineno, std::move(row)});
    }
  }

  bool done() const { return pos_ >= lines_.size(); }
  const std::vector<std::string>& peek() const { return lines_[pos_].words; }
  int line() const { return done() ? -1 : lines_[pos_].number; }
  const std::vector<std::string>& next() { return lines_[pos_++].words; }

 private:
  struct Line {
    int number;
    std::vector<std::string> words;
  };
  std::vector<Line> lines_;
  std::size_t pos_ = 0;
};

[[noreturn]] void fail(int line, const std::string& what) {
  throw ModelFormatError("model file line " + std::to_string(line) + ": " + what);
}

double to_double(const std::string& s, int line) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) fail(line, "malformed number '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    fail(line, "malformed number '" + s + "'");
  }
}

int to_index(const std::string& s, int n, int line) {
  double v = to_double(s, line);
  int i = static_cast<int>(v);
  if (i != v || i < 1 || i > n) fail(line, "index '" + s + "' outside 1.." + std::to_string(n));
  return i - 1;
}

Matrix read_matrix(Tokens& tok, int n) {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(n) * n);
  while (values.size() < static_cast<std::size_t>(n) * n) {
    if (tok.done() || is_section(tok.peek().front())) {
      fail(tok.line(), "matrix section ended after " + std::to_string(values.size()) + " of " +
                           std::to_string(n * n) + " values");
    }
    int line = tok.line();
    for (const auto& w : tok.next()) values.push_back(to_double(w, line));
  }
  if (values.size() != static_cast<std::size_t>(n) * n) fail(tok.line(), "too many matrix values");
  Matrix A(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) A(r, c) = values[static_cast<std::size_t>(r) * n + c];
  return A;
}

template <int Degree>
std::vector<typename PolyTensor<Degree>::Entry> read_tensor(Tokens& tok, int n) {
  std::vector<typename PolyTensor<Degree>::Entry> raw;
  while (!tok.done() && !is_section(tok.peek().front())) {
    int line = tok.line();
    const auto& w = tok.next();
    if (w.size() != static_cast<std::size_t>(Degree) + 2) {
      fail(line, "expected " + std::to_string(Degree + 2) + " fields in tensor tuple");
    }
    typename PolyTensor<Degree>::Entry e;
    e.k = to_index(w[0], n, line);
    for (int d = 0; d < Degree; ++d) e.idx[d] = to_index(w[d + 1], n, line);
    e.value = to_double(w.back(), line);
    raw.push_back(e);
  }
  return raw;
}

ForcingSpec read_force(Tokens& tok, int n) {
  ForcingSpec f;
  f.amplitude = Vector::Zero(n);
  while (!tok.done() && !is_section(tok.peek().front())) {
    int line = tok.line();
    const auto& w = tok.next();
    if (w[0] == "amplitude_vector") {
      if (w.size() != static_cast<std::size_t>(n) + 1) fail(line, "amplitude_vector needs n values");
      for (int i = 0; i < n; ++i) f.amplitude[i] = to_double(w[i + 1], line);
    } else if (w[0] == "omega" && w.size() == 2) {
      f.omega = to_double(w[1], line);
    } else if (w[0] == "epsilon" && w.size() == 2) {
      f.epsilon = to_double(w[1], line);
    } else {
      fail(line, "unknown FORCE key '" + w[0] + "'");
    }
  }
  return f;
}

}  // namespace

ModelFile parse_model(std::istream& in) {
  Tokens tok(in);
  int n = 0;
  std::optional<Matrix> M, C, K;
  std::vector<PolyTensor2::Entry> quad;
  std::vector<PolyTensor3::Entry> cubic;
  std::optional<ForcingSpec> forcing;

  while (!tok.done()) {
    int line = tok.line();
    const auto words = tok.next();
    const auto& key = words[0];
    if (key == "n") {
      if (words.size() != 2) fail(line, "expected 'n <count>'");
      double v = to_double(words[1], line);
      n = static_cast<int>(v);
      if (n != v || n < 1) fail(line, "n must be a positive integer");
      continue;
    }
    if (!is_section(key)) fail(line, "unknown key '" + key + "'");
    if (n == 0) fail(line, "section '" + key + "' before header key n");
    if (key == "M") M = read_matrix(tok, n);
    if (key == "C") C = read_matrix(tok, n);
    if (key == "K") K = read_matrix(tok, n);
    if (key == "QUAD") {
      auto more = read_tensor<2>(tok, n);
      quad.insert(quad.end(), more.begin(), more.end());
    }
    if (key == "CUBIC") {
      auto more = read_tensor<3>(tok, n);
      cubic.insert(cubic.end(), more.begin(), more.end());
    }
    if (key == "FORCE") forcing = read_force(tok, n);
  }
  if (n == 0) throw ModelFormatError("model file has no 'n' header");
  if (!M || !K) throw ModelFormatError("model file needs both M and K sections");
  if (!C) C = Matrix::Zero(n, n);
  return {SecondOrderSystem(*M, *C, *K, PolyTensor2(n, std::move(quad)),
                            PolyTensor3(n, std::move(cubic))),
          forcing};
}

ModelFile read_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open model file '" + path.string() + "'");
  return parse_model(in);
}

void write_model(std::ostream& out, const SecondOrderSystem& sys,
                 const std::optional<ForcingSpec>& forcing) {
  const auto old_precision = out.precision(std::numeric_limits<double>::max_digits10);
  out << "n " << sys.n << "\n";
  auto matrix = [&](const char* name, const Matrix& A) {
    out << name << "\n";
    for (int r = 0; r < A.rows(); ++r) {
      for (int c = 0; c < A.cols(); ++c) out << (c ? " " : "") << A(r, c);
      out << "\n";
    }
  };
  matrix("M", sys.M);
  matrix("C", sys.C);
  matrix("K", sys.K);
  out << "QUAD\n";
  for (const auto& e : sys.quad.entries()) {
    out << e.k + 1 << " " << e.idx[0] + 1 << " " << e.idx[1] + 1 << " " << e.value << "\n";
  }
  out << "CUBIC\n";
  for (const auto& e : sys.cubic.entries()) {
    out << e.k + 1 << " " << e.idx[0] + 1 << " " << e.idx[1] + 1 << " " << e.idx[2] + 1 << " "
        << e.value << "\n";
  }
  if (forcing) {
    out << "FORCE\namplitude_vector";
    for (int i = 0; i < forcing->amplitude.size(); ++i) out << " " << forcing->amplitude[i];
    out << "\nomega " << forcing->omega << "\nepsilon " << forcing->epsilon << "\n";
  }
  out.precision(old_precision);
}

void write_model(const std::filesystem::path& path, const SecondOrderSystem& sys,
                 const std::optional<ForcingSpec>& forcing) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write model file '" + path.string() + "'");
  write_model(out, sys, forcing);
}

}  // namespace ssmsel

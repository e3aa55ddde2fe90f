#include "lconf/dataio.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace lconf::dataio {

namespace {

void put_u64(std::vector<unsigned char>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>((v >> (8 * b)) & 0xffu));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int b = 7; b >= 0; --b) v = (v << 8) | p[b];
  return v;
}

std::vector<unsigned char> slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void spill(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

std::string trim(std::string s) {
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(trim(line));
  if (in.bad()) throw IoError("read failed: " + path.string());
  return lines;
}

bool parse_int(const std::string& tok, long long& out) {
  if (tok.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stoll(tok, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == tok.size();
}

bool parse_real(const std::string& tok, double& out) {
  if (tok.empty()) return false;
  std::size_t pos = 0;
  try {
    out = std::stod(tok, &pos);
  } catch (const std::exception&) {
    return false;
  }
  return pos == tok.size() && std::isfinite(out);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

std::vector<unsigned char> encode_lcf(const RowMatrix& m) {
  std::vector<unsigned char> out;
  out.reserve(kLcfHeaderBytes + 4 * static_cast<std::size_t>(m.size()));
  out.insert(out.end(), std::begin(kLcfMagic), std::end(kLcfMagic));
  put_u64(out, static_cast<std::uint64_t>(m.rows()));
  put_u64(out, static_cast<std::uint64_t>(m.cols()));
  out.push_back(kDtypeFloat32);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(m(i, j)));
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xffu));
    }
  }
  return out;
}

RowMatrix decode_lcf(const std::vector<unsigned char>& bytes) {
  if (bytes.size() < kLcfHeaderBytes) {
    throw FormatError("truncated header: expected " + std::to_string(kLcfHeaderBytes) + " bytes, got " +
                          std::to_string(bytes.size()),
                      bytes.size());
  }
  if (std::memcmp(bytes.data(), kLcfMagic, 4) != 0) throw FormatError("bad magic, expected \"LCF1\"", 0);
  const std::uint64_t n = get_u64(bytes.data() + 4);
  const std::uint64_t d = get_u64(bytes.data() + 12);
  if (bytes[20] != kDtypeFloat32) {
    throw FormatError("unknown dtype " + std::to_string(bytes[20]), 20);
  }
  constexpr std::uint64_t kMaxIndex = static_cast<std::uint64_t>(std::numeric_limits<Eigen::Index>::max());
  if (n > kMaxIndex || d > kMaxIndex || (d != 0 && n > (kMaxIndex / 4) / d)) {
    throw FormatError("matrix shape " + std::to_string(n) + "x" + std::to_string(d) + " too large", 4);
  }
  const std::uint64_t expected = kLcfHeaderBytes + 4 * n * d;
  if (bytes.size() != expected) {
    throw FormatError("payload length mismatch: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(bytes.size()),
                      std::min<std::uint64_t>(bytes.size(), expected));
  }
  RowMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  std::size_t off = kLcfHeaderBytes;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j, off += 4) {
      std::uint32_t bits = 0;
      for (int b = 3; b >= 0; --b) bits = (bits << 8) | bytes[off + static_cast<std::size_t>(b)];
      const float v = std::bit_cast<float>(bits);
      if (!std::isfinite(v)) throw FormatError("non-finite value", off);
      m(i, j) = static_cast<double>(v);
    }
  }
  return m;
}

void write_matrix(const std::filesystem::path& path, const RowMatrix& m) {
  const auto bytes = encode_lcf(m);
  spill(path, std::string(bytes.begin(), bytes.end()));
}

RowMatrix read_matrix(const std::filesystem::path& path) { return decode_lcf(slurp(path)); }

void write_embeddings(const std::filesystem::path& path, const FeatureMatrix& features) {
  write_matrix(path, features.data());
}

FeatureMatrix read_embeddings(const std::filesystem::path& path) {
  RowMatrix m = read_matrix(path);
  if (m.rows() == 0) throw FormatError("embedding file has zero rows", 4);
  if (m.cols() == 0) throw FormatError("embedding file has zero columns", 12);
  return FeatureMatrix(std::move(m));
}

Labels read_labels_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  Labels labels;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const std::string& tok = lines[ln];
    if (tok.empty()) continue;
    if (labels.empty() && ln == 0 && tok == "label") continue;
    long long v = 0;
    if (!parse_int(tok, v) || v < 0 || v > std::numeric_limits<int>::max()) {
      throw ParseError("expected a non-negative integer label, got \"" + tok + "\"", ln + 1);
    }
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

void write_labels_csv(const std::filesystem::path& path, std::span<const int> labels) {
  std::string text = "label\n";
  for (int l : labels) text += std::to_string(l) + "\n";
  spill(path, text);
}

void write_confidence_csv(const std::filesystem::path& path, const ConfidenceVector& w) {
  std::string text = "index,confidence\n";
  for (std::size_t i = 0; i < w.size(); ++i) text += std::to_string(i) + "," + format_real(w[i]) + "\n";
  spill(path, text);
}

ConfidenceVector read_confidence_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<double> values;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    if (ln == 0 && lines[ln] == "index,confidence") continue;
    const auto cols = split_commas(lines[ln]);
    long long idx = 0;
    double v = 0;
    if (cols.size() != 2 || !parse_int(cols[0], idx) || !parse_real(cols[1], v)) {
      throw ParseError("expected \"index,confidence\" row, got \"" + lines[ln] + "\"", ln + 1);
    }
    if (idx != static_cast<long long>(values.size())) {
      throw ParseError("index " + std::to_string(idx) + " out of sequence", ln + 1);
    }
    if (v < 0.0 || v > 1.0) throw ParseError("confidence outside [0, 1]", ln + 1);
    values.push_back(v);
  }
  return ConfidenceVector(std::move(values));
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  std::vector<std::vector<double>> rows;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    if (lines[ln].empty() || lines[ln][0] == '#') continue;
    std::vector<double> row;
    for (const auto& tok : split_commas(lines[ln])) {
      double v = 0;
      if (!parse_real(tok, v)) throw ParseError("expected a real number, got \"" + tok + "\"", ln + 1);
      row.push_back(v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("row has " + std::to_string(row.size()) + " columns, expected " +
                           std::to_string(rows.front().size()),
                       ln + 1);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty matrix file", 1);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

void write_graph_csv(const std::filesystem::path& path, const SparseMatrix& adjacency) {
  std::string text = "i,j,weight\n";
  for (Eigen::Index i = 0; i < adjacency.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(adjacency, i); it; ++it) {
      if (it.col() > i) text += std::to_string(i) + "," + std::to_string(it.col()) + "," + format_real(it.value()) + "\n";
    }
  }
  spill(path, text);
}

void write_confusion_csv(const std::filesystem::path& path, const Eigen::MatrixX<long>& confusion) {
  std::string text;
  for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
    for (Eigen::Index j = 0; j < confusion.cols(); ++j) {
      if (j) text += ",";
      text += std::to_string(confusion(i, j));
    }
    text += "\n";
  }
  spill(path, text);
}

nlohmann::json to_json(const RunReport& report) {
  nlohmann::json timings = nlohmann::json::object();
  for (const auto& [name, seconds] : report.timings) {
    if (!(seconds >= 0.0)) throw InputError("timing \"" + name + "\" is negative or NaN");
    timings[name] = seconds;
  }
  return nlohmann::json{{"config", report.config},
                        {"per_epoch", report.per_epoch},
                        {"final", report.final_metrics},
                        {"timings", std::move(timings)}};
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) { spill(path, doc.dump(2) + "\n"); }

void write_report(const std::filesystem::path& path, const RunReport& report) { write_json(path, to_json(report)); }

nlohmann::json read_json(const std::filesystem::path& path) {
  const auto bytes = slurp(path);
  return nlohmann::json::parse(bytes.begin(), bytes.end());
}

}  // namespace lconf::dataio

#include "gibbscal/data_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "gibbscal/errors.hpp"

namespace gibbscal {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t row) {
  double v = 0.0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || s.empty())
    fail(ErrorKind::Data, "row " + std::to_string(row) + ": cannot parse number '" + s + "'");
  return v;
}

}  // namespace

ExperimentData parse_experiment_csv(const std::string& text, std::string id) {
  std::stringstream in(text);
  std::string line;
  if (!std::getline(in, line)) fail(ErrorKind::Data, "empty CSV");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  const auto header = split(trim(line));
  int ix = -1;
  int iy = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "x") ix = static_cast<int>(i);
    if (header[i] == "y") iy = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0) fail(ErrorKind::Data, "CSV header must contain columns x and y");

  std::vector<double> xs;
  std::vector<double> ys;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split(trim(line));
    if (cells.size() != header.size())
      fail(ErrorKind::Data, "row " + std::to_string(row) + ": expected " + std::to_string(header.size()) + " columns");
    xs.push_back(parse_number(cells[static_cast<std::size_t>(ix)], row));
    ys.push_back(parse_number(cells[static_cast<std::size_t>(iy)], row));
  }
  if (xs.size() < 2) fail(ErrorKind::Data, "CSV needs at least two data rows");
  Eigen::VectorXd x = Eigen::Map<Eigen::VectorXd>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  try {
    return ExperimentData(std::move(x), std::move(y), std::move(id));
  } catch (const Error& e) {
    fail(ErrorKind::Data, e.what());
  }
}

ExperimentData read_experiment_csv(const std::filesystem::path& path, std::string id) {
  if (id.empty()) id = path.stem().string();
  std::string text;
  try {
    text = read_file(path);
  } catch (const Error& e) {
    fail(ErrorKind::Data, e.what());
  }
  try {
    return parse_experiment_csv(text, id);
  } catch (const Error& e) {
    fail(ErrorKind::Data, path.string() + ": " + e.what());
  }
}

std::string experiment_csv(const ExperimentData& data) {
  std::string out = "x,y\n";
  for (Eigen::Index i = 0; i < data.size(); ++i)
    out += format_double(data.x()(i)) + "," + format_double(data.y()(i)) + "\n";
  return out;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Data, "cannot write " + tmp.string());
    out << content;
    if (!out) fail(ErrorKind::Data, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Data, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace gibbscal

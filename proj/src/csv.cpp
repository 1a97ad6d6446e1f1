#include "pinnebm/csv.hpp"

#include "pinnebm/errors.hpp"

#include <charconv>
#include <cmath>

namespace pinnebm {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> header)
    : path_(path), header_(std::move(header)), out_(path) {
  if (!out_) throw IoError("cannot write " + path.string());
  for (const auto& h : header_) *this << std::string_view(h);
  end_row();
}

void CsvWriter::put(std::string_view text) {
  if (cell_ >= header_.size()) {
    throw StructuralError(path_.string() + ": row has more than " + std::to_string(header_.size()) + " cells");
  }
  if (cell_ > 0) out_ << ',';
  out_ << text;
  ++cell_;
}

CsvWriter& CsvWriter::operator<<(std::string_view cell) {
  put(cell);
  return *this;
}

CsvWriter& CsvWriter::operator<<(double cell) {
  put(format_double(cell));
  return *this;
}

CsvWriter& CsvWriter::operator<<(long cell) {
  put(std::to_string(cell));
  return *this;
}

void CsvWriter::end_row() {
  if (cell_ != header_.size()) {
    throw StructuralError(path_.string() + ": row has " + std::to_string(cell_) + " cells, header has " +
                          std::to_string(header_.size()));
  }
  out_ << '\n';
  cell_ = 0;
}

void CsvWriter::close() {
  out_.close();
  if (!out_) throw IoError("failed writing " + path_.string());
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw StructuralError("no column '" + std::string(name) + "'");
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t end = line.find(',', pos);
    out.push_back(line.substr(pos, end == std::string::npos ? std::string::npos : end - pos));
    if (end == std::string::npos) break;
    pos = end + 1;
  }
  return out;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  long no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) throw ParseError("row width differs from header", no);
    t.rows.push_back(std::move(cells));
  }
  if (t.header.empty()) throw ParseError("missing header", no);
  return t;
}

}  // namespace pinnebm

#include "compaudit/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "compaudit/error.hpp"
#include "compaudit/kernels.hpp"

static_assert(std::endian::native == std::endian::little,
              "CMPX i/o assumes a little-endian host");

namespace compaudit {
namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_ingest("FileNotFound", "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

std::string strip_bom(std::string s) {
  if (s.size() >= 3 && static_cast<unsigned char>(s[0]) == 0xEF &&
      static_cast<unsigned char>(s[1]) == 0xBB && static_cast<unsigned char>(s[2]) == 0xBF) {
    s.erase(0, 3);
  }
  return s;
}

double parse_double(const std::string& cell, const std::string& where) {
  if (cell.empty()) throw_ingest("EmptyCell", "empty cell at " + where);
  double v = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) {
    throw_ingest("MalformedNumber", "cannot parse '" + cell + "' at " + where);
  }
  if (!std::isfinite(v)) {
    throw_ingest("MalformedNumber", "non-finite value '" + cell + "' at " + where);
  }
  return v;
}

void check_unique_ids(const std::vector<std::string>& ids, const std::string& what) {
  std::unordered_set<std::string> seen;
  seen.reserve(ids.size());
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw_ingest("DuplicateId", "duplicate " + what + " '" + id + "'");
    }
  }
}

struct CsvTable {
  std::vector<std::string> col_names;
  std::vector<std::string> ids;
  Matrix values;
};

CsvTable load_csv_table(const std::string& path, bool binary_cells) {
  const auto lines = split_lines(read_file(path));
  if (lines.empty()) throw_ingest("EmptyFile", path + " has no header row");

  auto header = split_csv(strip_bom(lines[0]));
  if (header.empty() || header[0] != "id") {
    throw_ingest("BadHeader", path + ": first header cell must be \"id\"");
  }
  const std::size_t ncols = header.size() - 1;
  if (ncols == 0) throw_ingest("BadHeader", path + ": header names no value columns");
  const std::size_t nrows = lines.size() - 1;
  if (nrows < 2) throw_ingest("TooFewRows", path + ": need at least 2 data rows");

  CsvTable t;
  t.col_names.assign(header.begin() + 1, header.end());
  check_unique_ids(t.col_names, "column name in " + path);
  t.ids.reserve(nrows);
  t.values = Matrix(nrows, ncols);

  for (std::size_t r = 0; r < nrows; ++r) {
    const auto cells = split_csv(lines[r + 1]);
    if (cells.size() != header.size()) {
      throw_ingest("RaggedRow", path + ": row " + std::to_string(r + 2) + " has " +
                                    std::to_string(cells.size()) + " cells, expected " +
                                    std::to_string(header.size()));
    }
    if (cells[0].empty()) {
      throw_ingest("EmptyCell", path + ": empty id in row " + std::to_string(r + 2));
    }
    t.ids.push_back(cells[0]);
    for (std::size_t c = 0; c < ncols; ++c) {
      const std::string& cell = cells[c + 1];
      const std::string where = path + " row " + std::to_string(r + 2) + " column '" +
                                t.col_names[c] + "'";
      if (binary_cells) {
        if (cell == "0") {
          t.values.at(r, c) = 0.0;
        } else if (cell == "1") {
          t.values.at(r, c) = 1.0;
        } else if (cell.empty()) {
          throw_ingest("EmptyCell", "empty cell at " + where);
        } else {
          throw_ingest("NonBinaryValue", "value '" + cell + "' at " + where + " is not 0 or 1");
        }
      } else {
        t.values.at(r, c) = parse_double(cell, where);
      }
    }
  }
  check_unique_ids(t.ids, "id in " + path);
  return t;
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_ingest("FileNotFound", "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw_ingest("WriteFailed", "short write to " + path);
}

// Shortest round-trip decimal form, so CSV files re-load bit-exactly.
std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::uint32_t read_u32(const unsigned char* p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

}  // namespace

AttributeMatrix load_attributes_csv(const std::string& path) {
  CsvTable t = load_csv_table(path, /*binary_cells=*/true);
  return AttributeMatrix{std::move(t.ids), std::move(t.col_names), std::move(t.values)};
}

EmbeddingMatrix load_embeddings_csv(const std::string& path) {
  CsvTable t = load_csv_table(path, /*binary_cells=*/false);
  return EmbeddingMatrix{std::move(t.ids), std::move(t.values)};
}

void save_attributes_csv(const std::string& path, const AttributeMatrix& a) {
  std::string out = "id";
  for (const auto& name : a.attribute_names) out += "," + name;
  out += "\n";
  for (std::size_t i = 0; i < a.values.rows; ++i) {
    out += a.entity_ids[i];
    for (std::size_t j = 0; j < a.values.cols; ++j) {
      out += a.values.at(i, j) == 1.0 ? ",1" : ",0";
    }
    out += "\n";
  }
  write_file(path, out);
}

void save_matrix_csv(const std::string& path, const std::vector<std::string>& row_ids,
                     const std::vector<std::string>& col_names, const Matrix& values) {
  std::string out = "id";
  for (const auto& name : col_names) out += "," + name;
  out += "\n";
  for (std::size_t i = 0; i < values.rows; ++i) {
    out += row_ids[i];
    for (std::size_t j = 0; j < values.cols; ++j) {
      out += ",";
      out += format_double(values.at(i, j));
    }
    out += "\n";
  }
  write_file(path, out);
}

EmbeddingMatrix load_binary(const std::string& path) {
  const std::string bytes = read_file(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), "CMPX", 4) != 0) {
    throw_ingest("BadMagic", path + ": missing CMPX magic");
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t rows = read_u32(p + 4);
  const std::uint32_t cols = read_u32(p + 8);
  const std::uint32_t id_len = read_u32(p + 12);

  const std::size_t need =
      16 + static_cast<std::size_t>(id_len) + 8ull * rows * cols;
  if (bytes.size() != need) {
    throw_ingest("Truncated", path + ": expected " + std::to_string(need) + " bytes, found " +
                                  std::to_string(bytes.size()));
  }

  std::vector<std::string> ids;
  {
    const std::string block = bytes.substr(16, id_len);
    std::size_t start = 0;
    while (start <= block.size() && !block.empty()) {
      std::size_t end = block.find('\n', start);
      if (end == std::string::npos) end = block.size();
      ids.push_back(block.substr(start, end - start));
      if (end == block.size()) break;
      start = end + 1;
    }
  }
  if (ids.size() != rows) {
    throw_ingest("IdCountMismatch", path + ": " + std::to_string(ids.size()) + " ids for " +
                                        std::to_string(rows) + " rows");
  }
  check_unique_ids(ids, "id in " + path);
  if (rows < 2 || cols < 1) throw_ingest("TooFewRows", path + ": need q >= 2 and m >= 1");

  EmbeddingMatrix e;
  e.entity_ids = std::move(ids);
  e.values = Matrix(rows, cols);
  std::memcpy(e.values.data.data(), bytes.data() + 16 + id_len, 8ull * rows * cols);
  if (!e.values.all_finite()) {
    throw_ingest("MalformedNumber", path + ": payload contains NaN or Inf");
  }
  return e;
}

void save_binary(const std::string& path, const EmbeddingMatrix& e) {
  std::string ids;
  for (std::size_t i = 0; i < e.entity_ids.size(); ++i) {
    if (i > 0) ids += '\n';
    ids += e.entity_ids[i];
  }
  std::string out = "CMPX";
  const auto put_u32 = [&out](std::uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
  };
  put_u32(static_cast<std::uint32_t>(e.values.rows));
  put_u32(static_cast<std::uint32_t>(e.values.cols));
  put_u32(static_cast<std::uint32_t>(ids.size()));
  out += ids;
  const std::size_t payload = 8 * e.values.data.size();
  const std::size_t head = out.size();
  out.resize(head + payload);
  std::memcpy(out.data() + head, e.values.data.data(), payload);
  write_file(path, out);
}

EmbeddingMatrix load_embedding_table(const std::string& path) {
  const auto lines = split_lines(read_file(path));
  if (lines.size() < 2) throw_ingest("TooFewRows", path + ": need at least 2 lines");

  EmbeddingMatrix e;
  std::size_t dim = 0;
  std::vector<double> row;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    std::istringstream ss(lines[r]);
    std::string token;
    if (!(ss >> token)) continue;
    row.clear();
    std::string cell;
    while (ss >> cell) {
      row.push_back(parse_double(cell, path + " line " + std::to_string(r + 1)));
    }
    if (row.empty()) {
      throw_ingest("DimensionMismatch", path + " line " + std::to_string(r + 1) + ": no values");
    }
    if (dim == 0) {
      dim = row.size();
      e.values = Matrix(0, dim);
      e.values.cols = dim;
    } else if (row.size() != dim) {
      throw_ingest("DimensionMismatch", path + " line " + std::to_string(r + 1) + ": got " +
                                            std::to_string(row.size()) + " values, expected " +
                                            std::to_string(dim));
    }
    e.entity_ids.push_back(token);
    e.values.data.insert(e.values.data.end(), row.begin(), row.end());
    ++e.values.rows;
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : e.entity_ids) {
    if (!seen.insert(id).second) {
      throw_ingest("DuplicateToken", path + ": duplicate token '" + id + "'");
    }
  }
  if (e.values.rows < 2) throw_ingest("TooFewRows", path + ": need at least 2 entities");
  return e;
}

EmbeddingMatrix load_embeddings_any(const std::string& path) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) throw_ingest("FileNotFound", "cannot open " + path);
    char magic[4] = {0, 0, 0, 0};
    probe.read(magic, 4);
    if (probe.gcount() == 4 && std::memcmp(magic, "CMPX", 4) == 0) return load_binary(path);
  }
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) {
    return load_embeddings_csv(path);
  }
  return load_embedding_table(path);
}

ValidationReport validate(const AttributeMatrix& a) {
  ValidationReport r;
  for (std::size_t j = 0; j < a.values.cols; ++j) {
    bool all0 = true;
    bool all1 = true;
    for (std::size_t i = 0; i < a.values.rows; ++i) {
      if (a.values.at(i, j) == 0.0) {
        all1 = false;
      } else {
        all0 = false;
      }
    }
    if (all0 || all1) r.constant_attribute_columns.push_back(a.attribute_names[j]);
  }
  return r;
}

AlignResult align(const AttributeMatrix& a, const EmbeddingMatrix& u) {
  std::unordered_map<std::string, std::size_t> a_index;
  a_index.reserve(a.entity_ids.size());
  for (std::size_t i = 0; i < a.entity_ids.size(); ++i) a_index.emplace(a.entity_ids[i], i);

  std::unordered_map<std::string, std::size_t> u_index;
  u_index.reserve(u.entity_ids.size());
  for (std::size_t i = 0; i < u.entity_ids.size(); ++i) u_index.emplace(u.entity_ids[i], i);

  std::vector<std::string> common;
  for (const auto& id : a.entity_ids) {
    if (u_index.count(id)) common.push_back(id);
  }
  if (common.empty()) {
    throw_precondition("EmptyIntersection", "align: the entity id sets do not intersect");
  }
  std::sort(common.begin(), common.end());

  AlignResult res;
  for (const auto& id : a.entity_ids) {
    if (!u_index.count(id)) res.dropped_from_attributes.push_back(id);
  }
  for (const auto& id : u.entity_ids) {
    if (!a_index.count(id)) res.dropped_from_embeddings.push_back(id);
  }
  std::sort(res.dropped_from_attributes.begin(), res.dropped_from_attributes.end());
  std::sort(res.dropped_from_embeddings.begin(), res.dropped_from_embeddings.end());

  const std::size_t q = common.size();
  AttributeMatrix na;
  na.entity_ids = common;
  na.attribute_names = a.attribute_names;
  na.values = Matrix(q, a.values.cols);
  EmbeddingMatrix nu;
  nu.entity_ids = common;
  nu.values = Matrix(q, u.values.cols);
  for (std::size_t i = 0; i < q; ++i) {
    const std::size_t ai = a_index.at(common[i]);
    const std::size_t ui = u_index.at(common[i]);
    std::copy(a.values.row(ai), a.values.row(ai) + a.values.cols, na.values.row(i));
    std::copy(u.values.row(ui), u.values.row(ui) + u.values.cols, nu.values.row(i));
  }
  res.dataset = AlignedDataset{std::move(na), std::move(nu)};
  return res;
}

bool has_duplicate_attribute_rows(const AttributeMatrix& a) {
  std::unordered_set<std::string> seen;
  seen.reserve(a.values.rows);
  std::string key(a.values.cols, '0');
  for (std::size_t i = 0; i < a.values.rows; ++i) {
    for (std::size_t j = 0; j < a.values.cols; ++j) {
      key[j] = a.values.at(i, j) == 1.0 ? '1' : '0';
    }
    if (!seen.insert(key).second) return true;
  }
  return false;
}

AlignedDataset group_by_combination(const AlignedDataset& d) {
  const std::size_t q = d.attributes.values.rows;
  const std::size_t n = d.attributes.values.cols;
  const std::size_t m = d.embeddings.values.cols;

  // Bucket rows by their attribute pattern. The map key is the 0/1 byte
  // pattern; member lists are later walked in entity-id order so the mean is
  // independent of the input row order.
  std::unordered_map<std::string, std::vector<std::size_t>> buckets;
  std::string pattern(n, '0');
  for (std::size_t i = 0; i < q; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      pattern[j] = d.attributes.values.at(i, j) == 1.0 ? '1' : '0';
    }
    buckets[pattern].push_back(i);
  }

  struct Group {
    std::string key;
    std::string pattern;
    std::vector<std::size_t> members;
  };
  std::vector<Group> groups;
  groups.reserve(buckets.size());
  for (auto& [pat, members] : buckets) {
    std::vector<std::string> active;
    for (std::size_t j = 0; j < n; ++j) {
      if (pat[j] == '1') active.push_back(d.attributes.attribute_names[j]);
    }
    std::sort(active.begin(), active.end());
    std::string key;
    for (std::size_t k = 0; k < active.size(); ++k) {
      if (k > 0) key += '+';
      key += active[k];
    }
    std::sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return d.attributes.entity_ids[a] < d.attributes.entity_ids[b];
    });
    groups.push_back(Group{std::move(key), pat, std::move(members)});
  }
  std::sort(groups.begin(), groups.end(),
            [](const Group& a, const Group& b) { return a.key < b.key; });

  AlignedDataset out;
  out.attributes.attribute_names = d.attributes.attribute_names;
  out.attributes.values = Matrix(groups.size(), n);
  out.embeddings.values = Matrix(groups.size(), m);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    out.attributes.entity_ids.push_back(groups[g].key);
    for (std::size_t j = 0; j < n; ++j) {
      out.attributes.values.at(g, j) = groups[g].pattern[j] == '1' ? 1.0 : 0.0;
    }
    double* mean = out.embeddings.values.row(g);
    for (const std::size_t member : groups[g].members) {
      kernels::axpy(1.0, d.embeddings.values.row(member), mean, m);
    }
    kernels::scale(1.0 / static_cast<double>(groups[g].members.size()), mean, m);
  }
  out.embeddings.entity_ids = out.attributes.entity_ids;
  check_unique_ids(out.attributes.entity_ids, "group key");
  return out;
}

EmbeddingMatrix normalize_rows(const EmbeddingMatrix& u) {
  EmbeddingMatrix out = u;
  for (std::size_t i = 0; i < out.values.rows; ++i) {
    double* r = out.values.row(i);
    const double norm = std::sqrt(kernels::sum_squares(r, out.values.cols));
    if (norm == 0.0) {
      throw_precondition("ZeroNormRow",
                         "normalize_rows: row '" + u.entity_ids[i] + "' has zero norm");
    }
    kernels::scale(1.0 / norm, r, out.values.cols);
  }
  return out;
}

}  // namespace compaudit

#include <charconv>
#include <istream>
#include <ostream>

#include "sigtrust/embedding.hpp"

namespace sigtrust {

void write_embeddings(std::ostream& out, const EmbeddingMatrix<double>& emb) {
  const auto& nodes = emb.node_vectors();
  for (Eigen::Index r = 0; r < nodes.rows(); ++r) {
    out << r;
    for (Eigen::Index c = 0; c < nodes.cols(); ++c) out << ',' << format_double(nodes(r, c));
    out << '\n';
  }
}

EmbeddingMatrix<double> read_embeddings(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> values;
    std::size_t id = 0;
    std::size_t field = 0;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      const auto token = rest.substr(0, comma);
      const char* first = token.data();
      const char* last = token.data() + token.size();
      std::from_chars_result result{};
      if (field == 0) {
        result = std::from_chars(first, last, id);
      } else {
        double v = 0.0;
        result = std::from_chars(first, last, v);
        values.push_back(v);
      }
      if (result.ec != std::errc{} || result.ptr != last) {
        throw Error(Errc::ParseError, "embedding line " + std::to_string(line_no) + ": bad field " +
                                          std::to_string(field));
      }
      ++field;
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (id != rows.size()) {
      throw Error(Errc::ParseError, "embedding line " + std::to_string(line_no) +
                                        ": expected device " + std::to_string(rows.size()));
    }
    if (!rows.empty() && values.size() != rows.front().size()) {
      throw Error(Errc::ParseError, "embedding line " + std::to_string(line_no) + ": width mismatch");
    }
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw Error(Errc::ParseError, "embedding file is empty");

  EmbeddingMatrix<double> emb(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      emb.node_vectors()(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return emb;
}

}  // namespace sigtrust

#include "equips/csv.hpp"

#include "equips/error.hpp"
#include "equips/text.hpp"
#include "equips/voxel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace equips {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
    s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return std::string(s);
}

} // namespace

std::string format_distribution_csv(const PercentileSampleSet &samples,
                                    const std::optional<CharacteristicDistribution> &fit) {
  std::string out = kDistributionCsvHeader;
  out += '\n';
  for (const auto &s : samples.samples()) {
    out += format_real(s.percentile);
    out += ',';
    out += format_real(percentile_to_threshold(s.percentile));
    out += ',';
    out += format_real(s.value);
    out += ',';
    if (fit) {
      out += format_real(s.value / fit->center());
      out += ',';
      out += format_real(fit->cdf(s.value));
    } else {
      out += ',';
    }
    out += '\n';
  }
  return out;
}

void write_distribution_csv(const PercentileSampleSet &samples,
                            const std::optional<CharacteristicDistribution> &fit,
                            const std::string &path) {
  const std::string text = format_distribution_csv(samples, fit);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw IoError(path, "cannot open for writing");
  out << text;
  if (!out)
    throw IoError(path, "write failed");
}

QuantityTable parse_quantity_csv(const std::string &text, const std::string &source) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (header.empty() && std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty())
      continue;
    for (auto f : split_fields(line))
      header.push_back(trim(f));
  }
  const bool scalar = header == std::vector<std::string>{"percentile", "quantity"};
  const bool series = header == std::vector<std::string>{"percentile", "time", "value"};
  if (!scalar && !series)
    throw ValidationError(source + ":" + std::to_string(line_no) +
                          ": expected header 'percentile,quantity' or 'percentile,time,value'");

  struct Row {
    std::size_t line;
    std::vector<double> fields;
  };
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty())
      continue;
    const auto fields = split_fields(line);
    if (fields.size() != header.size())
      throw ValidationError(source + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, found " +
                            std::to_string(fields.size()));
    Row row{line_no, {}};
    for (std::size_t c = 0; c < fields.size(); ++c) {
      const auto v = parse_real(fields[c]);
      if (!v || !std::isfinite(*v))
        throw ValidationError(source + ":" + std::to_string(line_no) + ": column '" + header[c] +
                              "' is not a finite number: '" + trim(fields[c]) + "'");
      row.fields.push_back(*v);
    }
    if (!(row.fields[0] >= 0.0 && row.fields[0] <= 100.0))
      throw ValidationError(source + ":" + std::to_string(line_no) +
                            ": percentile outside [0, 100]");
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw ValidationError(source + ": no data rows");

  if (scalar) {
    std::map<double, std::size_t> seen;
    std::vector<PercentileSample> samples;
    for (const auto &r : rows) {
      auto [it, fresh] = seen.emplace(r.fields[0], r.line);
      if (!fresh)
        throw ValidationError(source + ":" + std::to_string(r.line) + ": duplicate percentile " +
                              format_real(r.fields[0]) + " (first on line " +
                              std::to_string(it->second) + ")");
      samples.push_back({r.fields[0], r.fields[1]});
    }
    return PercentileSampleSet(std::move(samples));
  }

  std::map<double, std::vector<std::pair<double, const Row *>>> grouped;
  for (const auto &r : rows)
    grouped[r.fields[0]].emplace_back(r.fields[1], &r);
  std::vector<QuantitySeries> out;
  for (auto &[q, points] : grouped) {
    std::stable_sort(points.begin(), points.end(),
                     [](const auto &a, const auto &b) { return a.first < b.first; });
    QuantitySeries s;
    s.percentile = q;
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (i > 0 && points[i].first == points[i - 1].first)
        throw ValidationError(source + ":" + std::to_string(points[i].second->line) +
                              ": duplicate time " + format_real(points[i].first) +
                              " for percentile " + format_real(q));
      s.times.push_back(points[i].first);
      s.values.push_back(points[i].second->fields[2]);
    }
    s.validate();
    out.push_back(std::move(s));
  }
  return out;
}

QuantityTable read_quantity_csv(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError(path, "cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_quantity_csv(buf.str(), path);
}

} // namespace equips

#include "paqman/policy_io.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace paqman {

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

namespace {

double parse_double(const std::string& s) {
  double x = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw std::invalid_argument("bad number: " + s);
  return x;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

Action GridPolicy::lookup(int queue, double rate) const {
  const int q = std::clamp(queue, 0, queue_levels - 1);
  return table.actions.at(index(q, grid.snap(rate)));
}

void write_policy_csv(std::ostream& out, const GridPolicy& p) {
  for (const auto& [k, v] : p.metadata) out << "# " << k << " = " << v << '\n';
  out << "# gain = " << format_double(p.table.gain) << '\n'
      << "# residual_span = " << format_double(p.table.residual_span) << '\n'
      << "# iterations = " << p.table.iterations << '\n'
      << "# converged = " << (p.table.converged ? "true" : "false") << '\n'
      << "rate_index,rate_value_pkts_per_s,queue,action,bias\n";
  for (std::size_t r = 0; r < p.grid.size(); ++r)
    for (int q = 0; q < p.queue_levels; ++q) {
      const std::size_t s = p.index(q, r);
      out << r << ',' << format_double(p.grid[r]) << ',' << q << ',' << static_cast<int>(p.table.actions[s]) << ','
          << format_double(s < p.table.bias.size() ? p.table.bias[s] : 0.0) << '\n';
    }
}

GridPolicy read_policy_csv(std::istream& in) {
  GridPolicy p;
  std::string line;
  std::vector<double> rates;
  int max_queue = -1;
  struct Row {
    std::size_t r;
    int q;
    int a;
    double bias;
  };
  std::vector<Row> rows;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = trim(line.substr(1, eq - 1)), value = trim(line.substr(eq + 1));
      if (key == "gain") p.table.gain = parse_double(value);
      else if (key == "residual_span") p.table.residual_span = parse_double(value);
      else if (key == "iterations") p.table.iterations = std::stol(value);
      else if (key == "converged") p.table.converged = value == "true";
      else p.metadata[key] = value;
      continue;
    }
    if (!header) {
      if (trim(line) != "rate_index,rate_value_pkts_per_s,queue,action,bias")
        throw std::invalid_argument("unexpected policy header: " + line);
      header = true;
      continue;
    }
    std::istringstream ss(line);
    std::string f[5];
    for (auto& x : f)
      if (!std::getline(ss, x, ',')) throw std::invalid_argument("malformed policy row: " + line);
    Row row{std::stoul(f[0]), std::stoi(f[2]), std::stoi(f[3]), parse_double(trim(f[4]))};
    if (row.a != 0 && row.a != 1) throw std::invalid_argument("action must be 0 or 1");
    if (row.r == rates.size()) rates.push_back(parse_double(f[1]));
    else if (row.r > rates.size()) throw std::invalid_argument("rate indices must be contiguous");
    max_queue = std::max(max_queue, row.q);
    rows.push_back(row);
  }
  if (rates.empty()) throw std::invalid_argument("policy file has no rows");
  p.grid = RateGrid(rates);
  p.queue_levels = max_queue + 1;
  if (rows.size() != rates.size() * static_cast<std::size_t>(p.queue_levels))
    throw std::invalid_argument("policy grid is incomplete");
  p.table.actions.assign(rows.size(), Action::admit);
  p.table.bias.assign(rows.size(), 0.0);
  for (const auto& row : rows) {
    const std::size_t s = p.index(row.q, row.r);
    p.table.actions[s] = static_cast<Action>(row.a);
    p.table.bias[s] = row.bias;
  }
  return p;
}

void write_heatmap_csv(std::ostream& out, const GridPolicy& p) {
  out << "rate_pkts_per_s";
  for (int q = 0; q < p.queue_levels; ++q) out << ",q" << q;
  out << '\n';
  for (std::size_t r = 0; r < p.grid.size(); ++r) {
    out << format_double(p.grid[r]);
    for (int q = 0; q < p.queue_levels; ++q) out << ',' << static_cast<int>(p.table.actions[p.index(q, r)]);
    out << '\n';
  }
}

}  // namespace paqman

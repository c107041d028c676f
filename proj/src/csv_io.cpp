#include "dscaf/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>

#include "dscaf/errors.hpp"

namespace dscaf {

std::string format_real(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

std::string format_real(const std::optional<double>& value) {
  return value ? format_real(*value) : std::string();
}

std::vector<std::string> split_csv_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.emplace_back(line.substr(start));
      break;
    }
    cells.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

namespace {

struct RowContext {
  std::size_t line;
  const std::vector<std::string>* cells;

  [[noreturn]] void fail(std::size_t col, const std::string& what) const {
    throw InputError("line " + std::to_string(line) + ", column " +
                     std::to_string(col + 1) + ": " + what);
  }

  const std::string& cell(std::size_t col) const { return (*cells)[col]; }

  template <typename Int>
  Int integer(std::size_t col) const {
    const std::string& s = cell(col);
    Int v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail(col, "expected an integer, got '" + s + "'");
    }
    return v;
  }

  double real(std::size_t col) const {
    const std::string& s = cell(col);
    if (s == "inf") return INFINITY;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
      fail(col, "expected a number, got '" + s + "'");
    }
    return v;
  }

  template <typename T, typename Parse>
  std::optional<T> optional(std::size_t col, Parse parse) const {
    if (cell(col).empty()) return std::nullopt;
    return parse(col);
  }
};

void expect_header(std::istream& in, std::string_view header) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("missing CSV header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    throw InputError("unexpected CSV header '" + line + "', expected '" +
                     std::string(header) + "'");
  }
}

template <typename RowFn>
void for_each_row(std::istream& in, std::size_t width, RowFn fn) {
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv_line(line);
    RowContext ctx{line_no, &cells};
    if (cells.size() != width) {
      ctx.fail(0, "expected " + std::to_string(width) + " cells, got " +
                      std::to_string(cells.size()));
    }
    fn(ctx);
  }
}

}  // namespace

void write_catalog(std::ostream& out, const std::vector<ItemRecord>& items) {
  out << kCatalogHeader << '\n';
  for (const auto& it : items) {
    out << it.item_id << ',' << it.seller_id << ',' << it.price_yen << ','
        << it.condition << ',' << format_real(it.age_days) << ',' << it.likes
        << ',' << format_real(it.demand_index) << ','
        << format_real(it.season_phase) << ',' << it.seller_ltv_yen << ','
        << format_real(it.key_action_ts) << '\n';
  }
}

std::vector<ItemRecord> read_catalog(std::istream& in) {
  expect_header(in, kCatalogHeader);
  std::vector<ItemRecord> items;
  for_each_row(in, 10, [&](const RowContext& row) {
    ItemRecord it;
    it.item_id = row.cell(0);
    it.seller_id = row.cell(1);
    it.price_yen = row.integer<Yen>(2);
    it.condition = row.integer<int>(3);
    it.age_days = row.real(4);
    it.likes = row.integer<int>(5);
    it.demand_index = row.real(6);
    it.season_phase = row.real(7);
    it.seller_ltv_yen = row.integer<Yen>(8);
    it.key_action_ts = row.real(9);
    try {
      validate(it);
    } catch (const InputError& e) {
      row.fail(0, e.what());
    }
    items.push_back(std::move(it));
  });
  return items;
}

void write_outcomes(std::ostream& out, const std::vector<OutcomeRecord>& log) {
  out << kOutcomeHeader << '\n';
  for (const auto& r : log) {
    out << r.item_id << ',' << r.round << ',' << r.coupon.discount_pct << ','
        << format_real(r.coupon.validity_hours) << ',' << r.coupon.cap_yen
        << ',' << format_real(r.attach_delay_h) << ',' << (r.sold ? 1 : 0)
        << ',' << format_real(r.purchase_delay_h) << ',';
    if (r.sale_price_yen) out << *r.sale_price_yen;
    out << ',';
    if (r.coupon_cost_yen) out << *r.coupon_cost_yen;
    out << '\n';
  }
}

std::vector<OutcomeRecord> read_outcomes(std::istream& in) {
  expect_header(in, kOutcomeHeader);
  std::vector<OutcomeRecord> log;
  for_each_row(in, 10, [&](const RowContext& row) {
    OutcomeRecord r;
    r.item_id = row.cell(0);
    r.round = row.integer<int>(1);
    r.coupon.discount_pct = row.integer<int>(2);
    r.coupon.validity_hours = row.real(3);
    r.coupon.cap_yen = row.integer<Yen>(4);
    r.attach_delay_h = row.real(5);
    const int sold = row.integer<int>(6);
    if (sold != 0 && sold != 1) row.fail(6, "sold must be 0 or 1");
    r.sold = sold == 1;
    r.purchase_delay_h =
        row.optional<double>(7, [&](std::size_t c) { return row.real(c); });
    r.sale_price_yen =
        row.optional<Yen>(8, [&](std::size_t c) { return row.integer<Yen>(c); });
    r.coupon_cost_yen =
        row.optional<Yen>(9, [&](std::size_t c) { return row.integer<Yen>(c); });
    try {
      validate(r);
    } catch (const InputError& e) {
      row.fail(0, e.what());
    }
    log.push_back(std::move(r));
  });
  return log;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return in;
}

namespace {

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

void write_catalog_file(const std::filesystem::path& path,
                        const std::vector<ItemRecord>& items) {
  auto out = open_output(path);
  write_catalog(out, items);
  finish(out, path);
}

std::vector<ItemRecord> read_catalog_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_catalog(in);
}

void write_outcomes_file(const std::filesystem::path& path,
                         const std::vector<OutcomeRecord>& log) {
  auto out = open_output(path);
  write_outcomes(out, log);
  finish(out, path);
}

std::vector<OutcomeRecord> read_outcomes_file(const std::filesystem::path& path) {
  auto in = open_input(path);
  return read_outcomes(in);
}

}  // namespace dscaf

#ifndef DSCAF_CSV_IO_HPP_
#define DSCAF_CSV_IO_HPP_

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dscaf/domain.hpp"

namespace dscaf {

inline constexpr std::string_view kCatalogHeader =
    "item_id,seller_id,price_yen,condition,age_days,likes,demand_index,"
    "season_phase,seller_ltv_yen,key_action_ts";
inline constexpr std::string_view kOutcomeHeader =
    "item_id,round,discount_pct,validity_hours,cap_yen,attach_delay_h,sold,"
    "purchase_delay_h,sale_price_yen,coupon_cost_yen";

// Fixed 12-significant-digit rendering shared by every text output.
std::string format_real(double value);
// Same, with empty output for an absent value.
std::string format_real(const std::optional<double>& value);

std::vector<std::string> split_csv_line(std::string_view line);

void write_catalog(std::ostream& out, const std::vector<ItemRecord>& items);
std::vector<ItemRecord> read_catalog(std::istream& in);

void write_outcomes(std::ostream& out, const std::vector<OutcomeRecord>& log);
std::vector<OutcomeRecord> read_outcomes(std::istream& in);

// File wrappers; IO failures raise IoError, malformed rows InputError.
void write_catalog_file(const std::filesystem::path& path,
                        const std::vector<ItemRecord>& items);
std::vector<ItemRecord> read_catalog_file(const std::filesystem::path& path);
void write_outcomes_file(const std::filesystem::path& path,
                         const std::vector<OutcomeRecord>& log);
std::vector<OutcomeRecord> read_outcomes_file(const std::filesystem::path& path);

// Opens for writing or throws IoError.
std::ofstream open_output(const std::filesystem::path& path);
std::ifstream open_input(const std::filesystem::path& path);

}  // namespace dscaf

#endif  // DSCAF_CSV_IO_HPP_

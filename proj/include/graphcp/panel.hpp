#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace graphcp {

/// Aligned spatio-temporal panel: weather x[i][t][m] and outage counts N[i][t].
/// Times are 0-based throughout the library and in files.
class PanelDataset {
public:
    PanelDataset() = default;
    PanelDataset(std::size_t units, std::size_t times, std::vector<std::string> variables);

    [[nodiscard]] std::size_t units() const noexcept { return units_; }
    [[nodiscard]] std::size_t times() const noexcept { return times_; }
    [[nodiscard]] std::size_t variables() const noexcept { return variable_names_.size(); }
    [[nodiscard]] const std::vector<std::string>& variable_names() const noexcept { return variable_names_; }

    [[nodiscard]] double weather(std::size_t i, std::size_t t, std::size_t m) const {
        return weather_[(i * times_ + t) * variables() + m];
    }
    double& weather(std::size_t i, std::size_t t, std::size_t m) {
        return weather_[(i * times_ + t) * variables() + m];
    }
    [[nodiscard]] std::int64_t count(std::size_t i, std::size_t t) const { return counts_[i * times_ + t]; }
    std::int64_t& count(std::size_t i, std::size_t t) { return counts_[i * times_ + t]; }

    std::string time_step{"15min"};

private:
    std::size_t units_{0};
    std::size_t times_{0};
    std::vector<std::string> variable_names_;
    std::vector<double> weather_;
    std::vector<std::int64_t> counts_;
};

/// Half-open time-index range [begin, end).
struct TimeRange {
    std::size_t begin{0};
    std::size_t end{0};
    [[nodiscard]] std::size_t size() const noexcept { return end - begin; }
    [[nodiscard]] bool contains(std::size_t t) const noexcept { return t >= begin && t < end; }
    friend bool operator==(const TimeRange&, const TimeRange&) = default;
};

struct DataSplit {
    TimeRange train;
    TimeRange calibration;
    TimeRange test;
};

/// Contiguous train/calibration/test split. Train and calibration lengths are
/// round(fraction * T); the test range takes the remainder.
[[nodiscard]] DataSplit split(std::size_t times, double train, double calibration, double test);
[[nodiscard]] inline DataSplit split(const PanelDataset& panel, double train, double calibration, double test) {
    return split(panel.times(), train, calibration, test);
}

[[nodiscard]] PanelDataset load_panel(const std::filesystem::path& weather_file,
                                      const std::filesystem::path& counts_file);
[[nodiscard]] PanelDataset parse_panel(std::istream& weather, std::istream& counts);

void write_panel(const std::filesystem::path& weather_file, const std::filesystem::path& counts_file,
                 const PanelDataset& panel);
void write_panel(std::ostream& weather, std::ostream& counts, const PanelDataset& panel);

} // namespace graphcp

#pragma once

#include <array>
#include <string>
#include <vector>

#include "gar/tensor.hpp"

namespace gar {

// Aligned panel of daily log-returns; dates are ISO strings, strictly
// increasing, with no missing cells (gappy rows are dropped at ingestion).
struct ReturnPanel {
    std::vector<std::string> dates;
    std::vector<std::string> assets;
    Tensor returns;  // n x M
    std::size_t dropped_rows = 0;

    std::size_t n_rows() const { return dates.size(); }
    std::size_t n_assets() const { return assets.size(); }
};

enum class Split { train, val, test };
std::string split_name(Split s);
Split split_from_name(const std::string& s);

struct WindowSample {
    Tensor context;   // M x T_c
    Tensor scenario;  // M x T
    int origin = 0;   // panel row index where the context starts
    std::string origin_date;
    Split split = Split::train;
};

struct WindowDataset {
    std::vector<WindowSample> samples;
    std::vector<std::string> assets;
    int cond_len = 0;
    int horizon = 0;
    int stride = 1;

    std::vector<const WindowSample*> of(Split s) const {
        std::vector<const WindowSample*> out;
        for (const auto& w : samples)
            if (w.split == s) out.push_back(&w);
        return out;
    }
};

ReturnPanel load_prices(const std::string& csv_path);

WindowDataset make_windows(const ReturnPanel& panel, int cond_len, int horizon, int stride = 1);

// Chronological 3-way split by origin order; a sample whose scenario window
// crosses a split boundary stays in the earlier split.
void split_dataset(WindowDataset& ds, const std::array<double, 3>& ratios);

// True when no sample's window dates overlap a later split's date range.
bool leakage_free(const WindowDataset& ds);

// Binary cache: JSON header line + row-major float64 block.
void save_panel(const ReturnPanel& panel, const std::string& path);
ReturnPanel load_panel(const std::string& path);
void save_dataset(const WindowDataset& ds, const std::string& path);
WindowDataset load_dataset(const std::string& path);

void write_returns_csv(const ReturnPanel& panel, const std::string& path);

}  // namespace gar

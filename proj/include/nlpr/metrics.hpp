#pragma once

#include "nlpr/grid.hpp"

#include <string>
#include <vector>

namespace nlpr {

/// The six fusion-quality metrics. Definitions used here:
///  - rmse: global, over all entries.
///  - ergas: 100/d * sqrt(mean_c (RMSE_c / mean_c(ref))^2); zero-mean
///    reference bands are excluded (with a warning).
///  - sam_degrees: mean per-pixel spectral angle.
///  - uiqi: mean of the universal quality index over all 8x8 windows
///    (periodic, stride 1) and bands.
///  - psnr_db: per band with peak = reference band max, averaged over bands,
///    capped at 99 dB.
///  - ssim: per band with k1=0.01, k2=0.03, 11-tap Gaussian window
///    (sigma 1.5, periodic), dynamic range from the reference; averaged.
struct MetricReport {
    double rmse = 0;
    double ergas = 0;
    double sam_degrees = 0;
    double uiqi = 0;
    double psnr_db = 0;
    double ssim = 0;
    std::vector<std::string> warnings;

    static std::string csv_header();
    std::string csv_row() const;
    std::string pretty() const;
};

MetricReport evaluate(const MultibandImage& reference, const MultibandImage& estimate,
                      int resolution_ratio);

}  // namespace nlpr

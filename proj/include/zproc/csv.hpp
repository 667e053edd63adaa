#pragma once

// CSV schemas used by the CLI: scalar series `x`, diffusion path `t,x`,
// survival data `time,status,z1..zd`, and the Z-path dump `u,z1..zd,norm`.
// Numbers are written with 17 significant digits; parse errors carry the
// offending line number.

#include <string>
#include <vector>

#include "zproc/models.hpp"
#include "zproc/zcore.hpp"

namespace zproc {

std::string format_double(double x);  // %.17g

std::vector<double> read_scalar_series(const std::string& path);
void write_scalar_series(const std::vector<double>& xs, std::ostream& out);

// Path rows are (t, x); returns the x column and checks t is nondecreasing.
std::vector<double> read_ou_path(const std::string& path);
void write_ou_path(const std::vector<double>& path, double delta, std::ostream& out);

SurvData read_surv_csv(const std::string& path);
void write_surv_csv(const SurvData& data, std::ostream& out);

void write_zpath_csv(const ZPath& path, std::ostream& out);

}  // namespace zproc

#include "mmrmx/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

namespace mmrmx {

namespace {

constexpr double kPanelW = 190.0;
constexpr double kPanelH = 130.0;
constexpr double kGap = 14.0;
constexpr double kLeft = 64.0;
constexpr double kTop = 58.0;
constexpr double kBottom = 46.0;
constexpr double kRight = 16.0;

const char* estimator_color(const std::string& name) {
    if (name == "ancova") return "#1b9e77";
    if (name == "mmrm") return "#d95f02";
    return "#7570b3";  // mmrmx
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

std::string label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

void text(std::string& svg, double x, double y, const std::string& s,
          const char* anchor, double size, const char* extra = "") {
    svg += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
           "\" text-anchor=\"" + anchor + "\" font-family=\"sans-serif\"" + extra + ">" +
           s + "</text>\n";
}

}  // namespace

std::string render_rates_svg(const std::vector<ResultRow>& rows,
                             const RatePlotOptions& opts) {
    if (rows.empty()) throw Error("InvalidArgument", "no rows to plot");

    std::set<double> rho_set, b_set, delta_set;
    std::set<std::string> estimators;
    for (const auto& r : rows) {
        rho_set.insert(r.rho);
        b_set.insert(r.b);
        delta_set.insert(r.delta);
        estimators.insert(r.estimator);
    }
    const std::vector<double> rhos(rho_set.begin(), rho_set.end());
    const std::vector<double> bs(b_set.begin(), b_set.end());
    const std::vector<double> deltas(delta_set.begin(), delta_set.end());

    const double dmin = deltas.front();
    const double dmax = deltas.back();
    const double dspan = dmax > dmin ? dmax - dmin : 1.0;

    const double width = kLeft + bs.size() * kPanelW + (bs.size() - 1) * kGap + kRight;
    const double height = kTop + rhos.size() * kPanelH + (rhos.size() - 1) * kGap + kBottom;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
           num(width) + "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) +
           " " + num(height) + "\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    text(svg, width / 2.0, 20.0, opts.title, "middle", 14.0, " font-weight=\"bold\"");

    // Legend.
    double lx = width / 2.0 - 120.0;
    for (const auto& est : estimators) {
        svg += "<line x1=\"" + num(lx) + "\" y1=\"34\" x2=\"" + num(lx + 22) +
               "\" y2=\"34\" stroke=\"" + estimator_color(est) + "\" stroke-width=\"2\"/>\n";
        text(svg, lx + 27, 38.0, est, "start", 11.0);
        lx += 90.0;
    }

    for (std::size_t ri = 0; ri < rhos.size(); ++ri) {
        for (std::size_t ci = 0; ci < bs.size(); ++ci) {
            const double x0 = kLeft + ci * (kPanelW + kGap);
            const double y0 = kTop + ri * (kPanelH + kGap);
            const auto sx = [&](double d) {
                return x0 + 10.0 + (d - dmin) / dspan * (kPanelW - 20.0);
            };
            const auto sy = [&](double v) {
                return y0 + kPanelH - v / opts.y_max * kPanelH;
            };

            svg += "<rect x=\"" + num(x0) + "\" y=\"" + num(y0) + "\" width=\"" +
                   num(kPanelW) + "\" height=\"" + num(kPanelH) +
                   "\" fill=\"none\" stroke=\"#888888\"/>\n";
            text(svg, x0 + kPanelW / 2.0, y0 - 3.0,
                 "rho=" + label(rhos[ri]) + ", b=" + label(bs[ci]), "middle", 10.0);

            // y ticks on the leftmost column.
            const int n_ticks = 4;
            for (int t = 0; t <= n_ticks; ++t) {
                const double v = opts.y_max * t / n_ticks;
                svg += "<line x1=\"" + num(x0) + "\" y1=\"" + num(sy(v)) + "\" x2=\"" +
                       num(x0 + kPanelW) + "\" y2=\"" + num(sy(v)) +
                       "\" stroke=\"#eeeeee\"/>\n";
                if (ci == 0) text(svg, x0 - 5.0, sy(v) + 3.0, label(v), "end", 9.0);
            }
            // x ticks on the bottom row.
            for (double d : deltas) {
                if (ri + 1 == rhos.size())
                    text(svg, sx(d), y0 + kPanelH + 12.0, label(d), "middle", 9.0);
            }

            if (opts.reference_line && *opts.reference_line <= opts.y_max) {
                const double yr = sy(*opts.reference_line);
                svg += "<line x1=\"" + num(x0) + "\" y1=\"" + num(yr) + "\" x2=\"" +
                       num(x0 + kPanelW) + "\" y2=\"" + num(yr) +
                       "\" stroke=\"#cc0000\" stroke-dasharray=\"4 3\"/>\n";
            }

            for (const auto& est : estimators) {
                // Collect this facet's points in delta order.
                std::map<double, const ResultRow*> pts;
                for (const auto& r : rows)
                    if (r.rho == rhos[ri] && r.b == bs[ci] && r.estimator == est)
                        pts[r.delta] = &r;
                if (pts.empty()) continue;
                std::string poly;
                for (const auto& [d, r] : pts) {
                    const double vy = std::min(r->rejection_rate, opts.y_max);
                    poly += num(sx(d)) + "," + num(sy(vy)) + " ";
                }
                svg += "<polyline points=\"" + poly + "\" fill=\"none\" stroke=\"" +
                       estimator_color(est) + "\" stroke-width=\"1.5\"/>\n";
                for (const auto& [d, r] : pts) {
                    const double vy = std::min(r->rejection_rate, opts.y_max);
                    svg += "<circle cx=\"" + num(sx(d)) + "\" cy=\"" + num(sy(vy)) +
                           "\" r=\"2\" fill=\"" + estimator_color(est) + "\"/>\n";
                }
            }
        }
    }

    text(svg, kLeft + (width - kLeft - kRight) / 2.0, height - 10.0, "delta (dropout hazard)",
         "middle", 11.0);
    svg += "<text x=\"14\" y=\"" + num(kTop + (height - kTop - kBottom) / 2.0) +
           "\" font-size=\"11.00\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "transform=\"rotate(-90 14 " +
           num(kTop + (height - kTop - kBottom) / 2.0) + ")\">" +
           opts.y_label + "</text>\n";
    svg += "</svg>\n";
    return svg;
}

}  // namespace mmrmx

#include "bellsim/svg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "bellsim/geometry.hpp"

namespace bellsim::svg {

namespace {
constexpr double kPi = std::numbers::pi;

// Margins around the data area.
constexpr double kW = 720, kH = 480, kML = 60, kMR = 20, kMT = 20, kMB = 45;

struct Frame {
    double x0, x1, y0, y1; // data ranges

    double px(double x) const { return kML + (x - x0) / (x1 - x0) * (kW - kML - kMR); }
    double py(double y) const { return kH - kMB - (y - y0) / (y1 - y0) * (kH - kMT - kMB); }
};

class Canvas {
public:
    explicit Canvas(Frame f) : f_(f) {
        out_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\""
             << kH << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n"
             << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    }

    void axes(const std::string& xlabel, const std::string& ylabel, int ticks = 5) {
        line(f_.x0, f_.y0, f_.x1, f_.y0, "black", 1.2);
        line(f_.x0, f_.y0, f_.x0, f_.y1, "black", 1.2);
        for (int t = 0; t <= ticks; ++t) {
            const double x = f_.x0 + (f_.x1 - f_.x0) * t / ticks;
            const double y = f_.y0 + (f_.y1 - f_.y0) * t / ticks;
            out_ << "<text x=\"" << f_.px(x) << "\" y=\"" << kH - kMB + 16
                 << "\" font-size=\"11\" text-anchor=\"middle\">" << label(x) << "</text>\n";
            out_ << "<text x=\"" << kML - 8 << "\" y=\"" << f_.py(y) + 4
                 << "\" font-size=\"11\" text-anchor=\"end\">" << label(y) << "</text>\n";
        }
        out_ << "<text x=\"" << (kML + kW - kMR) / 2 << "\" y=\"" << kH - 8
             << "\" font-size=\"13\" text-anchor=\"middle\">" << xlabel << "</text>\n";
        out_ << "<text x=\"14\" y=\"" << (kMT + kH - kMB) / 2
             << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
             << (kMT + kH - kMB) / 2 << ")\">" << ylabel << "</text>\n";
    }

    void line(double x1, double y1, double x2, double y2, const std::string& color,
              double width) {
        out_ << "<line x1=\"" << f_.px(x1) << "\" y1=\"" << f_.py(y1) << "\" x2=\"" << f_.px(x2)
             << "\" y2=\"" << f_.py(y2) << "\" stroke=\"" << color << "\" stroke-width=\""
             << width << "\"/>\n";
    }

    void polyline(std::span<const std::pair<double, double>> pts, const std::string& color) {
        out_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : pts) out_ << round2(f_.px(x)) << ',' << round2(f_.py(y)) << ' ';
        out_ << "\"/>\n";
    }

    void dot(double x, double y, const std::string& color, double r = 2.0) {
        out_ << "<circle cx=\"" << round2(f_.px(x)) << "\" cy=\"" << round2(f_.py(y))
             << "\" r=\"" << r << "\" fill=\"" << color << "\"/>\n";
    }

    void text(double x, double y, const std::string& s, const std::string& color = "black") {
        out_ << "<text x=\"" << f_.px(x) << "\" y=\"" << f_.py(y) << "\" font-size=\"12\" fill=\""
             << color << "\">" << s << "</text>\n";
    }

    std::string finish() {
        out_ << "</svg>\n";
        return out_.str();
    }

private:
    static std::string label(double v) {
        std::ostringstream ss;
        ss.precision(3);
        ss << v;
        return ss.str();
    }
    static double round2(double v) { return std::round(v * 100.0) / 100.0; }

    Frame f_;
    std::ostringstream out_;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
                          "#8c564b", "#e377c2", "#7f7f7f", "#17becf", "#bcbd22"};

} // namespace

std::string hcurves(std::span<const int> ns, int points) {
    Canvas c(Frame{0.0, kPi, 0.0, 2.0});
    c.axes("closeness angle", "H_n");
    std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(points + 1));
    for (std::size_t m = 0; m < ns.size(); ++m) {
        const int n = ns[m];
        for (int p = 0; p <= points; ++p) {
            const double g = kPi * p / points;
            pts[static_cast<std::size_t>(p)] = {g, geom::cdf_h(g, n)};
        }
        const std::string color = kPalette[m % 10];
        c.polyline(pts, color);
        c.text(2.2, geom::cdf_h(2.2, n), "n=" + std::to_string(n), color);
    }
    return c.finish();
}

std::string scurve(int n, double gamma_max, int points) {
    double smin = 1e30, smax = -1e30;
    std::vector<std::pair<double, double>> pts(static_cast<std::size_t>(points + 1));
    for (int p = 0; p <= points; ++p) {
        const double g = gamma_max * p / points;
        const double s = geom::s_curve(g, n);
        pts[static_cast<std::size_t>(p)] = {g, s};
        smin = std::min(smin, s);
        smax = std::max(smax, s);
    }
    Canvas c(Frame{0.0, gamma_max, std::min(smin, 2.0) - 0.1, smax + 0.2});
    c.axes("gamma", "S_" + std::to_string(n));
    c.polyline(pts, kPalette[0]);
    const auto peak = geom::s_max(n);
    if (peak.gamma_star <= gamma_max) {
        c.dot(peak.gamma_star, peak.s, "#d62728", 3.0);
        std::ostringstream lbl;
        lbl.precision(7);
        lbl << "max " << peak.s << " at pi/4";
        c.text(peak.gamma_star + 0.03, peak.s, lbl.str(), "#d62728");
    }
    return c.finish();
}

std::string correlation_distribution(const models::ModelSpec& m, int hi_i, int hi_j) {
    struct Val {
        double e;
        int i, j;
    };
    std::vector<Val> vals;
    for (int i = 1; i <= m.k(); ++i)
        for (int j = 1; j <= m.l(); ++j)
            vals.push_back({models::correlation_exact(m, i, j), i, j});
    std::sort(vals.begin(), vals.end(), [](const Val& u, const Val& v) { return u.e < v.e; });

    Canvas c(Frame{0.0, static_cast<double>(vals.size()), -1.05, 1.05});
    c.axes("rank", "E_ab");
    for (std::size_t r = 0; r < vals.size(); ++r) {
        const Val& v = vals[r];
        std::string color = "#b0b0b0";
        double radius = 1.6;
        if (v.i == hi_i && v.j == hi_j) {
            color = "black";
            radius = 3.5;
        } else if (v.i == hi_i) {
            color = "#d62728";
            radius = 2.4;
        } else if (v.j == hi_j) {
            color = "#1f77b4";
            radius = 2.4;
        }
        c.dot(static_cast<double>(r), v.e, color, radius);
    }
    return c.finish();
}

std::string loop_rectangle(std::span<const TrialRecord> log, int i, int j,
                           std::size_t max_points) {
    std::vector<const TrialRecord*> rows;
    for (const TrialRecord& r : log) {
        if (r.a != i || r.b != j) continue;
        if (std::any_cast<models::LoopState>(&r.hidden) == nullptr)
            throw MissingTrace("log has no hidden traces for key pair (" + std::to_string(i) +
                               "," + std::to_string(j) + ")");
        rows.push_back(&r);
        if (rows.size() >= max_points) break;
    }
    if (rows.empty())
        throw MissingTrace("no traced trials at key pair (" + std::to_string(i) + "," +
                           std::to_string(j) + ")");

    Canvas c(Frame{-0.05, 2.05, -0.05, 2.05});
    c.axes("lambda_A", "lambda_B");
    for (const TrialRecord* r : rows) {
        const auto* st = std::any_cast<models::LoopState>(&r->hidden);
        const bool agree = r->x && r->y && (*r->x) * (*r->y) == +1;
        c.dot(st->lambda_a, st->lambda_b, agree ? "#d62728" : "#1f77b4", 2.0);
    }
    return c.finish();
}

} // namespace bellsim::svg

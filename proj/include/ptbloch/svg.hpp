#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "ptbloch/common.hpp"

namespace ptbloch {

/// Minimal SVG scatter/line plotter for complex-plane data. Text output is
/// deterministic (fixed formatting, no timestamps), so artifact files can be
/// compared bytewise across runs.
class SvgPlot {
public:
    SvgPlot(int width = 760, int height = 560) : width_(width), height_(height) {}

    void include_point(cplx z) {
        lo_re_ = std::min(lo_re_, z.real());
        hi_re_ = std::max(hi_re_, z.real());
        lo_im_ = std::min(lo_im_, z.imag());
        hi_im_ = std::max(hi_im_, z.imag());
    }

    void polyline(const std::vector<cplx>& pts, const std::string& color,
                  double stroke = 1.5) {
        for (const cplx& z : pts) include_point(z);
        lines_.push_back({pts, color, stroke});
    }

    void marker(cplx z, const std::string& color, const std::string& shape = "circle",
                double size = 4.0) {
        include_point(z);
        markers_.push_back({z, color, shape, size});
    }

    void title(const std::string& t) { title_ = t; }

    std::string render() const {
        double lo_re = lo_re_, hi_re = hi_re_, lo_im = lo_im_, hi_im = hi_im_;
        if (lo_re > hi_re) { lo_re = -1.0; hi_re = 1.0; }
        if (lo_im > hi_im) { lo_im = -1.0; hi_im = 1.0; }
        const double pad_re = 0.05 * std::max(hi_re - lo_re, 1e-12);
        const double pad_im = 0.05 * std::max(hi_im - lo_im, 1e-12);
        lo_re -= pad_re; hi_re += pad_re;
        lo_im -= pad_im; hi_im += pad_im;

        const double plot_w = width_ - margin_left_ - margin_right_;
        const double plot_h = height_ - margin_top_ - margin_bottom_;
        auto px = [&](double re) {
            return margin_left_ + (re - lo_re) / (hi_re - lo_re) * plot_w;
        };
        auto py = [&](double im) {
            return margin_top_ + (hi_im - im) / (hi_im - lo_im) * plot_h;
        };

        std::string out;
        out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
               std::to_string(width_) + "\" height=\"" + std::to_string(height_) +
               "\" viewBox=\"0 0 " + std::to_string(width_) + " " +
               std::to_string(height_) + "\">\n";
        out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

        // frame and ticks
        out += "<rect x=\"" + fmt(margin_left_) + "\" y=\"" + fmt(margin_top_) +
               "\" width=\"" + fmt(plot_w) + "\" height=\"" + fmt(plot_h) +
               "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
        for (int i = 0; i <= ticks_; ++i) {
            const double re = lo_re + (hi_re - lo_re) * i / ticks_;
            const double im = lo_im + (hi_im - lo_im) * i / ticks_;
            const double x = px(re);
            const double y = py(im);
            out += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(margin_top_ + plot_h) +
                   "\" x2=\"" + fmt(x) + "\" y2=\"" +
                   fmt(margin_top_ + plot_h + 5) + "\" stroke=\"#444\"/>\n";
            out += "<text x=\"" + fmt(x) + "\" y=\"" +
                   fmt(margin_top_ + plot_h + 18) +
                   "\" font-size=\"11\" text-anchor=\"middle\">" + fmt(re) +
                   "</text>\n";
            out += "<line x1=\"" + fmt(margin_left_ - 5) + "\" y1=\"" + fmt(y) +
                   "\" x2=\"" + fmt(margin_left_) + "\" y2=\"" + fmt(y) +
                   "\" stroke=\"#444\"/>\n";
            out += "<text x=\"" + fmt(margin_left_ - 8) + "\" y=\"" + fmt(y + 4) +
                   "\" font-size=\"11\" text-anchor=\"end\">" + fmt(im) +
                   "</text>\n";
        }
        out += "<text x=\"" + fmt(margin_left_ + plot_w / 2) + "\" y=\"" +
               fmt(height_ - 8.0) +
               "\" font-size=\"12\" text-anchor=\"middle\">Re E</text>\n";
        out += "<text x=\"14\" y=\"" + fmt(margin_top_ + plot_h / 2) +
               "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 "
               "14 " + fmt(margin_top_ + plot_h / 2) + ")\">Im E</text>\n";
        if (!title_.empty())
            out += "<text x=\"" + fmt(margin_left_ + plot_w / 2) +
                   "\" y=\"18\" font-size=\"13\" text-anchor=\"middle\">" +
                   title_ + "</text>\n";

        for (const auto& line : lines_) {
            out += "<polyline fill=\"none\" stroke=\"" + line.color +
                   "\" stroke-width=\"" + fmt(line.stroke) + "\" points=\"";
            for (const cplx& z : line.pts)
                out += fmt(px(z.real())) + "," + fmt(py(z.imag())) + " ";
            out += "\"/>\n";
        }
        for (const auto& m : markers_) {
            const double x = px(m.z.real());
            const double y = py(m.z.imag());
            if (m.shape == "cross") {
                out += "<path d=\"M " + fmt(x - m.size) + " " + fmt(y - m.size) +
                       " L " + fmt(x + m.size) + " " + fmt(y + m.size) + " M " +
                       fmt(x - m.size) + " " + fmt(y + m.size) + " L " +
                       fmt(x + m.size) + " " + fmt(y - m.size) + "\" stroke=\"" +
                       m.color + "\" stroke-width=\"1.6\"/>\n";
            } else if (m.shape == "plus") {
                out += "<path d=\"M " + fmt(x - m.size) + " " + fmt(y) + " L " +
                       fmt(x + m.size) + " " + fmt(y) + " M " + fmt(x) + " " +
                       fmt(y - m.size) + " L " + fmt(x) + " " + fmt(y + m.size) +
                       "\" stroke=\"" + m.color + "\" stroke-width=\"1.6\"/>\n";
            } else {
                out += "<circle cx=\"" + fmt(x) + "\" cy=\"" + fmt(y) +
                       "\" r=\"" + fmt(m.size) + "\" fill=\"none\" stroke=\"" +
                       m.color + "\" stroke-width=\"1.4\"/>\n";
            }
        }
        out += "</svg>\n";
        return out;
    }

private:
    struct Line {
        std::vector<cplx> pts;
        std::string color;
        double stroke;
    };
    struct Marker {
        cplx z;
        std::string color;
        std::string shape;
        double size;
    };

    static std::string fmt(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        return buf;
    }

    int width_, height_;
    double margin_left_ = 64, margin_right_ = 20, margin_top_ = 30,
           margin_bottom_ = 44;
    int ticks_ = 5;
    double lo_re_ = 1e300, hi_re_ = -1e300, lo_im_ = 1e300, hi_im_ = -1e300;
    std::vector<Line> lines_;
    std::vector<Marker> markers_;
    std::string title_;
};

} // namespace ptbloch

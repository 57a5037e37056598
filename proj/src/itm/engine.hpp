#pragma once

// Point-to-point Irregular Terrain Model (ITM 1.2.2 algorithm), generic over
// the arithmetic type. The routines follow the reference program statement
// by statement; the function-static state of the original lives in Engine
// members so that evaluations are reentrant.
//
// Every precision-dependent decision is reported to the optional trace under
// a stable site name (see README for the list).

#include <array>
#include <string_view>
#include <utility>
#include <vector>

#include "itmstab/itm/itm.hpp"
#include "numeric.hpp"

namespace itmstab::itm::detail {

template <class Real>
struct Prop {
    Real aref, dist;
    std::array<Real, 2> hg;
    Real wn, dh, ens, gme;
    typename Num<Real>::Complex zgnd;
    std::array<Real, 2> he, dl, the;
    int kwx = 0;
    int mdp = 0;
};

template <class Real>
struct PropA {
    Real dlsa, dx, ael, ak1, ak2, aed, emd, aes, ems;
    std::array<Real, 2> dls;
    Real dla, tha;
};

template <class Real>
struct PropV {
    Real sgc;
    int lvar = 0;
    int mdvar = 0;
    int klim = 0;
};

template <class Real>
class Engine {
public:
    using Complex = typename Num<Real>::Complex;

    Engine(Precision p, BranchTrace* trace) : c(p), trace_(trace) { reset(); }

    Num<Real> c;
    Prop<Real> prop;
    PropA<Real> propa;
    PropV<Real> propv;
    std::array<double, 2> terrain_horizon{};

    // ---- approximation routines -------------------------------------------

    Real aknfe(const Real& v2) {
        if (br("aknfe.small_v2", v2 < 5.76)) return 6.02 + 9.11 * sqrt(v2) - 1.27 * v2;
        return 12.953 + 4.343 * log(v2);
    }

    Real fht(const Real& x, const Real& pk) {
        Real w, fhtv;
        if (br("fht.near", x < 200.0)) {
            w = -log(pk);
            if (br("fht.near_asymptote", pk < 1e-5 || x * pow(w, 3.0) > 5495.0)) {
                fhtv = c(-117.0);
                if (br("fht.near_log", x > 1.0)) fhtv = 17.372 * log(x) + fhtv;
            } else {
                fhtv = 2.5e-5 * x * x / pk - 8.686 * w - 15.0;
            }
        } else {
            fhtv = 0.05751 * x - 4.343 * log(x);
            if (br("fht.blend", x < 2000.0)) {
                w = 0.0134 * x * exp(-0.005 * x);
                fhtv = (1.0 - w) * fhtv + w * (17.372 * log(x) - 117.0);
            }
        }
        return fhtv;
    }

    Real h0f(const Real& r, const Real& et) {
        static constexpr double a[5] = {25.0, 80.0, 177.0, 395.0, 705.0};
        static constexpr double b[5] = {24.0, 45.0, 68.0, 80.0, 105.0};
        Real q, x;
        int it = static_cast<int>(trunc_to_long(et));
        if (br("h0f.low", it <= 0)) {
            it = 1;
            q = c(0.0);
        } else if (br("h0f.high", it >= 5)) {
            it = 5;
            q = c(0.0);
        } else {
            q = et - static_cast<double>(it);
        }
        record("h0f.index", it);
        x = pow(1.0 / r, 2.0);
        Real h0fv = 4.343 * log((a[it - 1] * x + b[it - 1]) * x + 1.0);
        if (br("h0f.interpolate", q != 0.0))
            h0fv = (1.0 - q) * h0fv + q * 4.343 * log((a[it] * x + b[it]) * x + 1.0);
        return h0fv;
    }

    Real ahd(const Real& td) {
        static constexpr double a[3] = {133.4, 104.6, 71.8};
        static constexpr double b[3] = {0.332e-3, 0.212e-3, 0.157e-3};
        static constexpr double cc[3] = {-4.343, -1.086, 2.171};
        int i;
        if (td <= 10e3)
            i = 0;
        else if (td <= 70e3)
            i = 1;
        else
            i = 2;
        record("ahd.segment", i);
        return a[i] + b[i] * td + cc[i] * log(td);
    }

    Real qerfi(const Real& q) {
        constexpr double c0 = 2.515516698;
        constexpr double c1 = 0.802853;
        constexpr double c2 = 0.010328;
        constexpr double d1 = 1.432788;
        constexpr double d2 = 0.189269;
        constexpr double d3 = 0.001308;
        if (br("qerfi.median", q == 0.5)) return c(0.0);
        Real x = 0.5 - q;
        Real t = max_of(0.5 - abs(x), 0.000001);
        t = sqrt(-2.0 * log(t));
        Real v = t - ((c2 * t + c1) * t + c0) / (((d3 * t + d2) * t + d1) * t + 1.0);
        if (br("qerfi.upper_half", x < 0.0)) v = -v;
        return v;
    }

    Real free_space(const Real& fmhz, const Real& dkm) {
        return 32.45 + 20.0 * log10(fmhz) + 20.0 * log10(dkm);
    }

    // ---- preparatory routines ---------------------------------------------

    void qlrps(const Real& fmhz, const Real& zsys, const Real& en0, int ipol, const Real& eps,
               const Real& sgm) {
        const double gma = 157e-9;
        prop.wn = fmhz / 47.7;
        prop.ens = en0;
        if (zsys != 0.0) prop.ens *= exp(-zsys / 9460.0);
        prop.gme = gma * (1.0 - 0.04665 * exp(prop.ens / 179.3));
        Complex zq = c.complex(eps, 376.62 * sgm / prop.wn);
        prop.zgnd = sqrt(zq - 1.0);
        if (ipol != 0) prop.zgnd = prop.zgnd / zq;
    }

    void hzns(const std::vector<Real>& pfl) {
        const int np = static_cast<int>(trunc_to_long(pfl[0]));
        const Real& xi = pfl[1];
        Real za = pfl[2] + prop.hg[0];
        Real zb = pfl[np + 2] + prop.hg[1];
        Real qc = 0.5 * prop.gme;
        Real q = qc * prop.dist;
        prop.the[1] = (zb - za) / prop.dist;
        prop.the[0] = prop.the[1] - q;
        prop.the[1] = -prop.the[1] - q;
        prop.dl[0] = prop.dist;
        prop.dl[1] = prop.dist;
        if (np >= 2) {
            Real sa = c(0.0);
            Real sb = prop.dist;
            bool wq = true;
            for (int i = 1; i < np; i++) {
                sa += xi;
                sb -= xi;
                q = pfl[i + 2] - (qc * sa + prop.the[0]) * sa - za;
                if (br("hzns.tx_horizon", q > 0.0)) {
                    prop.the[0] += q / sa;
                    prop.dl[0] = sa;
                    wq = false;
                }
                if (!wq) {
                    q = pfl[i + 2] - (qc * sb + prop.the[1]) * sb - zb;
                    if (br("hzns.rx_horizon", q > 0.0)) {
                        prop.the[1] += q / sb;
                        prop.dl[1] = sb;
                    }
                }
            }
        }
    }

    /// Least-squares line through z between x1 and x2; values at both ends.
    void z1sq1(const std::vector<Real>& z, const Real& x1, const Real& x2, Real& z0, Real& zn) {
        Real xn = z[0];
        Real xa = c(static_cast<double>(trunc_to_long(dim(x1 / z[1], 0.0))));
        Real xb = xn - static_cast<double>(trunc_to_long(dim(xn, x2 / z[1])));
        if (br("z1sq1.widen", xb <= xa)) {
            xa = dim(xa, 1.0);
            xb = xn - dim(xn, xb + 1.0);
        }
        int ja = static_cast<int>(trunc_to_long(xa));
        const int jb = static_cast<int>(trunc_to_long(xb));
        record("z1sq1.first", ja);
        record("z1sq1.last", jb);
        const int np = static_cast<int>(z.size()) - 3;
        if (ja < 0 || jb > np || ja > jb) {
            throw DomainError("z1sq1: fit window [" + std::to_string(ja) + ", " + std::to_string(jb) +
                              "] outside profile of " + std::to_string(np) + " intervals");
        }
        const int n = jb - ja;
        xa = xb - xa;
        Real x = -0.5 * xa;
        xb += x;
        Real a = 0.5 * (z[ja + 2] + z[jb + 2]);
        Real b = 0.5 * (z[ja + 2] - z[jb + 2]) * x;
        for (int i = 2; i <= n; ++i) {
            ++ja;
            x += 1.0;
            a += z[ja + 2];
            b += z[ja + 2] * x;
        }
        a /= xa;
        b = b * 12.0 / ((xa * xa + 2.0) * xa);
        z0 = a - b * xb;
        zn = a + b * (xn - xb);
    }

    /// Value of rank ir in a[0..nn] (descending), partially reordering a.
    Real qtile(int nn, Real* a, int ir) {
        int m = 0;
        int n = nn;
        int i, j;
        int j1 = n;
        int i0 = m;
        const int k = std::min(std::max(0, ir), n);
        Real q = a[k];
        bool done = false;
        bool goto10 = true;
        while (!done) {
            if (goto10) {
                q = a[k];
                i0 = m;
                j1 = n;
            }
            i = i0;
            while (i <= n && a[i] >= q) i++;
            if (i > n) i = n;
            j = j1;
            while (j >= m && a[j] <= q) j--;
            if (j < m) j = m;
            if (i < j) {
                using std::swap;
                swap(a[i], a[j]);
                i0 = i + 1;
                j1 = j - 1;
                goto10 = false;
            } else if (i < k) {
                a[k] = a[i];
                a[i] = q;
                m = i + 1;
                goto10 = true;
            } else if (j > k) {
                a[k] = a[j];
                a[j] = q;
                n = j - 1;
                goto10 = true;
            } else {
                done = true;
            }
        }
        return q;
    }

    /// Interdecile range of the terrain between x1 and x2 about a linear fit.
    Real d1thx(const std::vector<Real>& pfl, const Real& x1, const Real& x2) {
        const int np = static_cast<int>(trunc_to_long(pfl[0]));
        Real xa = x1 / pfl[1];
        Real xb = x2 / pfl[1];
        Real d1thxv = c(0.0);
        if (br("d1thx.short", xb - xa < 2.0)) return d1thxv;
        int ka = static_cast<int>(trunc_to_long(0.1 * (xb - xa + 8.0)));
        ka = std::min(std::max(4, ka), 25);
        record("d1thx.ka", ka);
        const int n = 10 * ka - 5;
        const int kb = n - ka + 1;
        const Real sn = c(static_cast<double>(n - 1));
        std::vector<Real> s(static_cast<std::size_t>(n + 2));
        s[0] = sn;
        s[1] = c(1.0);
        xb = (xb - xa) / sn;
        int k = static_cast<int>(trunc_to_long(xa + 1.0));
        xa -= static_cast<double>(k);
        for (int j = 0; j < n; j++) {
            while (xa > 0.0 && k < np) {
                xa -= 1.0;
                ++k;
            }
            s[j + 2] = pfl[k + 2] + (pfl[k + 2] - pfl[k + 1]) * xa;
            xa = xa + xb;
        }
        z1sq1(s, c(0.0), sn, xa, xb);
        xb = (xb - xa) / sn;
        for (int j = 0; j < n; j++) {
            s[j + 2] -= xa;
            xa = xa + xb;
        }
        d1thxv = qtile(n - 1, s.data() + 2, ka - 1) - qtile(n - 1, s.data() + 2, kb - 1);
        d1thxv /= 1.0 - 0.8 * exp(-(x2 - x1) / 50.0e3);
        return d1thxv;
    }

    void qlrpfl(const std::vector<Real>& pfl, int klimx, int mdvarx) {
        std::array<Real, 2> xl;
        Real q, za, zb;
        prop.dist = pfl[0] * pfl[1];
        const int np = static_cast<int>(trunc_to_long(pfl[0]));
        hzns(pfl);
        terrain_horizon = {to_native(prop.dl[0]), to_native(prop.dl[1])};
        for (int j = 0; j < 2; j++) xl[j] = min_of(15.0 * prop.hg[j], 0.1 * prop.dl[j]);
        xl[1] = prop.dist - xl[1];
        prop.dh = d1thx(pfl, xl[0], xl[1]);
        if (br("qlrpfl.line_of_sight", prop.dl[0] + prop.dl[1] > 1.5 * prop.dist)) {
            z1sq1(pfl, xl[0], xl[1], za, zb);
            prop.he[0] = prop.hg[0] + dim(pfl[2], za);
            prop.he[1] = prop.hg[1] + dim(pfl[np + 2], zb);
            for (int j = 0; j < 2; j++)
                prop.dl[j] = sqrt(2.0 * prop.he[j] / prop.gme) *
                             exp(-0.07 * sqrt(prop.dh / max_of(prop.he[j], 5.0)));
            q = prop.dl[0] + prop.dl[1];
            if (br("qlrpfl.rescale_heights", q <= prop.dist)) {
                q = pow(prop.dist / q, 2.0);
                for (int j = 0; j < 2; j++) {
                    prop.he[j] *= q;
                    prop.dl[j] = sqrt(2.0 * prop.he[j] / prop.gme) *
                                 exp(-0.07 * sqrt(prop.dh / max_of(prop.he[j], 5.0)));
                }
            }
            for (int j = 0; j < 2; j++) {
                q = sqrt(2.0 * prop.he[j] / prop.gme);
                prop.the[j] = (0.65 * prop.dh * (q / prop.dl[j] - 1.0) - 2.0 * prop.he[j]) / q;
            }
        } else {
            z1sq1(pfl, xl[0], 0.9 * prop.dl[0], za, q);
            z1sq1(pfl, prop.dist - 0.9 * prop.dl[1], xl[1], q, zb);
            prop.he[0] = prop.hg[0] + dim(pfl[2], za);
            prop.he[1] = prop.hg[1] + dim(pfl[np + 2], zb);
        }
        prop.mdp = -1;
        propv.lvar = std::max(propv.lvar, 3);
        if (mdvarx >= 0) {
            propv.mdvar = mdvarx;
            propv.lvar = std::max(propv.lvar, 4);
        }
        if (klimx > 0) {
            propv.klim = klimx;
            propv.lvar = 5;
        }
        lrprop(c(0.0));
    }

    // ---- attenuation regimes ----------------------------------------------

    void adiff_init() {
        Real q = prop.hg[0] * prop.hg[1];
        adiff_.qk = prop.he[0] * prop.he[1] - q;
        if (prop.mdp < 0) q += 10.0;
        adiff_.wd1 = sqrt(1.0 + adiff_.qk / q);
        adiff_.xd1 = propa.dla + propa.tha / prop.gme;
        q = (1.0 - 0.8 * exp(-propa.dlsa / 50e3)) * prop.dh;
        q *= 0.78 * exp(-pow(q / 16.0, 0.25));
        adiff_.afo = min_of(15.0, 2.171 * log(1.0 + 4.77e-4 * prop.hg[0] * prop.hg[1] * prop.wn * q));
        adiff_.qk = 1.0 / abs(prop.zgnd);
        adiff_.aht = c(20.0);
        adiff_.xht = c(0.0);
        for (int j = 0; j < 2; ++j) {
            Real a = 0.5 * pow(prop.dl[j], 2.0) / prop.he[j];
            Real wa = pow(a * prop.wn, kThird);
            Real pk = adiff_.qk / wa;
            q = (1.607 - pk) * 151.0 * wa * prop.dl[j] / a;
            adiff_.xht += q;
            adiff_.aht += fht(q, pk);
        }
    }

    Real adiff(const Real& d) {
        Real th = propa.tha + d * prop.gme;
        Real ds = d - propa.dla;
        Real q = 0.0795775 * prop.wn * ds * pow(th, 2.0);
        Real adiffv = aknfe(q * prop.dl[0] / (ds + prop.dl[0])) + aknfe(q * prop.dl[1] / (ds + prop.dl[1]));
        Real a = ds / th;
        Real wa = pow(a * prop.wn, kThird);
        Real pk = adiff_.qk / wa;
        q = (1.607 - pk) * 151.0 * wa * th + adiff_.xht;
        Real ar = 0.05751 * q - 4.343 * log(q) - adiff_.aht;
        q = (adiff_.wd1 + adiff_.xd1 / d) *
            min_of((1.0 - 0.8 * exp(-d / 50e3)) * prop.dh * prop.wn, 6283.2);
        Real wd = 25.1 / (25.1 + sqrt(q));
        adiffv = ar * wd + (1.0 - wd) * adiffv + adiff_.afo;
        return adiffv;
    }

    void ascat_init() {
        ascat_.ad = prop.dl[0] - prop.dl[1];
        ascat_.rr = prop.he[1] / prop.he[0];
        if (br("ascat.swap_ends", ascat_.ad < 0.0)) {
            ascat_.ad = -ascat_.ad;
            ascat_.rr = 1.0 / ascat_.rr;
        }
        ascat_.etq = (5.67e-6 * prop.ens - 2.32e-3) * prop.ens + 0.031;
        ascat_.h0s = c(-15.0);
    }

    Real ascat(const Real& d) {
        Real h0, th;
        if (br("ascat.reuse_h0", ascat_.h0s > 15.0)) {
            h0 = ascat_.h0s;
        } else {
            th = prop.the[0] + prop.the[1] + d * prop.gme;
            Real r2 = 2.0 * prop.wn * th;
            Real r1 = r2 * prop.he[0];
            r2 *= prop.he[1];
            if (br("ascat.low_antennas", r1 < 0.2 && r2 < 0.2)) return c(1001.0);
            Real ss = (d - ascat_.ad) / (d + ascat_.ad);
            Real q = ascat_.rr / ss;
            ss = max_of(0.1, ss);
            q = min_of(max_of(0.1, q), 10.0);
            Real z0 = (d - ascat_.ad) * (d + ascat_.ad) * th * 0.25 / d;
            Real et = (ascat_.etq * exp(-pow(min_of(1.7, z0 / 8.0e3), 6.0)) + 1.0) * z0 / 1.7556e3;
            Real ett = max_of(et, 1.0);
            h0 = (h0f(r1, ett) + h0f(r2, ett)) * 0.5;
            h0 += min_of(h0, (1.38 - log(ett)) * log(ss) * log(q) * 0.49);
            h0 = dim(h0, 0.0);
            if (br("ascat.blend_low_et", et < 1.0))
                h0 = et * h0 + (1.0 - et) * 4.343 *
                                   log(pow((1.0 + 1.4142 / r1) * (1.0 + 1.4142 / r2), 2.0) * (r1 + r2) /
                                       (r1 + r2 + 2.8284));
            if (br("ascat.keep_h0", h0 > 15.0 && ascat_.h0s >= 0.0)) h0 = ascat_.h0s;
        }
        ascat_.h0s = h0;
        th = propa.tha + d * prop.gme;
        return ahd(th * d) + 4.343 * log(47.7 * prop.wn * pow(th, 4.0)) -
               0.1 * (prop.ens - 301.0) * exp(-th * d / 40e3) + h0;
    }

    void alos_init() { wls_ = 0.021 / (0.021 + prop.wn * prop.dh / max_of(10e3, propa.dlsa)); }

    Real alos(const Real& d) {
        Real q = (1.0 - 0.8 * exp(-d / 50e3)) * prop.dh;
        Real s = 0.78 * q * exp(-pow(q / 16.0, 0.25));
        q = prop.he[0] + prop.he[1];
        Real sps = q / sqrt(d * d + q * q);
        Complex r = (sps - prop.zgnd) / (sps + prop.zgnd) * exp(-min_of(10.0, prop.wn * s * sps));
        q = sq_magnitude(r);
        if (br("alos.rescale_reflection", q < 0.25 || q < sps)) r = r * sqrt(sps / q);
        Real alosv = propa.emd * d + propa.aed;
        q = prop.wn * prop.he[0] * prop.he[1] * 2.0 / d;
        if (br("alos.wrap_phase", q > 1.57)) q = 3.14 - 2.4649 / q;
        return (-4.343 * log(sq_magnitude(c.complex(cos(q), -sin(q)) + r)) - alosv) * wls_ + alosv;
    }

    void lrprop(const Real& d) {
        if (prop.mdp != 0) {
            for (int j = 0; j < 2; j++) propa.dls[j] = sqrt(2.0 * prop.he[j] / prop.gme);
            propa.dlsa = propa.dls[0] + propa.dls[1];
            propa.dla = prop.dl[0] + prop.dl[1];
            propa.tha = max_of(prop.the[0] + prop.the[1], -propa.dla * prop.gme);
            wlos_ = false;
            wscat_ = false;
            if (br("lrprop.freq_near_range", prop.wn < 0.838 || prop.wn > 210.0))
                prop.kwx = std::max(prop.kwx, 1);
            for (int j = 0; j < 2; j++)
                if (br("lrprop.height_near_range", prop.hg[j] < 1.0 || prop.hg[j] > 1000.0))
                    prop.kwx = std::max(prop.kwx, 1);
            for (int j = 0; j < 2; j++)
                if (br("lrprop.horizon_out_of_range", abs(prop.the[j]) > 200e-3 ||
                                                          prop.dl[j] < 0.1 * propa.dls[j] ||
                                                          prop.dl[j] > 3.0 * propa.dls[j]))
                    prop.kwx = std::max(prop.kwx, 3);
            if (br("lrprop.params_out_of_range",
                   prop.ens < 250.0 || prop.ens > 400.0 || prop.gme < 75e-9 || prop.gme > 250e-9 ||
                       prop.zgnd.real() <= abs(prop.zgnd.imag()) || prop.wn < 0.419 || prop.wn > 420.0))
                prop.kwx = 4;
            for (int j = 0; j < 2; j++)
                if (br("lrprop.height_out_of_range", prop.hg[j] < 0.5 || prop.hg[j] > 3000.0))
                    prop.kwx = 4;
            dmin_ = abs(prop.he[0] - prop.he[1]) / 200e-3;
            adiff_init();
            xae_ = pow(prop.wn * pow(prop.gme, 2.0), -kThird);
            Real d3 = max_of(propa.dlsa, 1.3787 * xae_ + propa.dla);
            Real d4 = d3 + 2.7574 * xae_;
            Real a3 = adiff(d3);
            Real a4 = adiff(d4);
            propa.emd = (a4 - a3) / (d4 - d3);
            propa.aed = a3 - propa.emd * d3;
        }
        if (prop.mdp >= 0) {
            prop.mdp = 0;
            prop.dist = d;
        }
        if (prop.dist > 0.0) {
            if (br("lrprop.dist_far", prop.dist > 1000e3)) prop.kwx = std::max(prop.kwx, 1);
            if (br("lrprop.dist_below_dmin", prop.dist < dmin_)) prop.kwx = std::max(prop.kwx, 3);
            if (br("lrprop.dist_out_of_range", prop.dist < 1e3 || prop.dist > 2000e3)) prop.kwx = 4;
        }
        if (br("lrprop.los_region", prop.dist < propa.dlsa)) {
            if (!wlos_) {
                alos_init();
                Real d2 = propa.dlsa;
                Real a2 = propa.aed + d2 * propa.emd;
                Real d0 = 1.908 * prop.wn * prop.he[0] * prop.he[1];
                Real d1;
                if (br("lrprop.aed_nonnegative", propa.aed >= 0.0)) {
                    d0 = min_of(d0, 0.5 * propa.dla);
                    d1 = d0 + 0.25 * (propa.dla - d0);
                } else {
                    d1 = max_of(-propa.aed / propa.emd, 0.25 * propa.dla);
                }
                Real a1 = alos(d1);
                bool wq = false;
                if (br("lrprop.three_point_fit", d0 < d1)) {
                    Real a0 = alos(d0);
                    Real q = log(d2 / d0);
                    propa.ak2 = max_of(0.0, ((d2 - d0) * (a1 - a0) - (d1 - d0) * (a2 - a0)) /
                                                ((d2 - d0) * log(d1 / d0) - (d1 - d0) * q));
                    wq = br("lrprop.log_term_used", propa.aed >= 0.0 || propa.ak2 > 0.0);
                    if (wq) {
                        propa.ak1 = (a2 - a0 - propa.ak2 * q) / (d2 - d0);
                        if (br("lrprop.ak1_negative_correction", propa.ak1 < 0.0)) {
                            propa.ak1 = c(0.0);
                            propa.ak2 = dim(a2, a0) / q;
                            if (br("lrprop.ak2_zero_fallback", propa.ak2 == 0.0)) propa.ak1 = propa.emd;
                        }
                    }
                }
                if (!wq) {
                    propa.ak1 = dim(a2, a1) / (d2 - d1);
                    propa.ak2 = c(0.0);
                    if (br("lrprop.ak1_zero_fallback", propa.ak1 == 0.0)) propa.ak1 = propa.emd;
                }
                propa.ael = a2 - propa.ak1 * d2 - propa.ak2 * log(d2);
                wlos_ = true;
            }
            if (prop.dist > 0.0) prop.aref = propa.ael + propa.ak1 * prop.dist + propa.ak2 * log(prop.dist);
        }
        if (prop.dist <= 0.0 || prop.dist >= propa.dlsa) {
            if (!wscat_) {
                ascat_init();
                Real d5 = propa.dla + 200e3;
                Real d6 = d5 + 200e3;
                Real a6 = ascat(d6);
                Real a5 = ascat(d5);
                if (br("lrprop.scatter_available", a5 < 1000.0)) {
                    propa.ems = (a6 - a5) / 200e3;
                    propa.dx = max_of(propa.dlsa,
                                      max_of(propa.dla + 0.3 * xae_ * log(47.7 * prop.wn),
                                             (a5 - propa.aed - propa.ems * d5) / (propa.emd - propa.ems)));
                    propa.aes = (propa.emd - propa.ems) * propa.dx + propa.aed;
                } else {
                    propa.ems = propa.emd;
                    propa.aes = propa.aed;
                    propa.dx = c(10.e6);
                }
                wscat_ = true;
            }
            if (br("lrprop.scatter_region", prop.dist > propa.dx))
                prop.aref = propa.aes + propa.ems * prop.dist;
            else
                prop.aref = propa.aed + propa.emd * prop.dist;
        }
        // Written so that a NaN attenuation also becomes zero.
        if (br("lrprop.clamp_negative", !(prop.aref > 0.0))) prop.aref = c(0.0);
    }

    // ---- variability --------------------------------------------------------

    Real curve(double c1, double c2, double x1, double x2, double x3, const Real& de) {
        return (c1 + c2 / (1.0 + pow((de - x2) / x3, 2.0))) * pow(de / x1, 2.0) /
               (1.0 + pow(de / x1, 2.0));
    }

    Real avar(const Real& zzt, const Real& zzl, const Real& zzc) {
        static constexpr double bv1[7] = {-9.67, -0.62, 1.26, -9.21, -0.62, -0.39, 3.15};
        static constexpr double bv2[7] = {12.7, 9.19, 15.5, 9.05, 9.19, 2.86, 857.9};
        static constexpr double xv1[7] = {144.9e3, 228.9e3, 262.6e3, 84.1e3, 228.9e3, 141.7e3, 2222.e3};
        static constexpr double xv2[7] = {190.3e3, 205.2e3, 185.2e3, 101.1e3, 205.2e3, 315.9e3, 164.8e3};
        static constexpr double xv3[7] = {133.8e3, 143.6e3, 99.8e3, 98.6e3, 143.6e3, 167.4e3, 116.3e3};
        static constexpr double bsm1[7] = {2.13, 2.66, 6.11, 1.98, 2.68, 6.86, 8.51};
        static constexpr double bsm2[7] = {159.5, 7.67, 6.65, 13.11, 7.16, 10.38, 169.8};
        static constexpr double xsm1[7] = {762.2e3, 100.4e3, 138.2e3, 139.1e3, 93.7e3, 187.8e3, 609.8e3};
        static constexpr double xsm2[7] = {123.6e3, 172.5e3, 242.2e3, 132.7e3, 186.8e3, 169.6e3, 119.9e3};
        static constexpr double xsm3[7] = {94.5e3, 136.4e3, 178.6e3, 193.5e3, 133.5e3, 108.9e3, 106.6e3};
        static constexpr double bsp1[7] = {2.11, 6.87, 10.08, 3.68, 4.75, 8.58, 8.43};
        static constexpr double bsp2[7] = {102.3, 15.53, 9.60, 159.3, 8.12, 13.97, 8.19};
        static constexpr double xsp1[7] = {636.9e3, 138.7e3, 165.3e3, 464.4e3, 93.2e3, 216.0e3, 136.2e3};
        static constexpr double xsp2[7] = {134.8e3, 143.7e3, 225.7e3, 93.1e3, 135.9e3, 152.0e3, 188.5e3};
        static constexpr double xsp3[7] = {95.6e3, 98.6e3, 129.7e3, 94.2e3, 113.4e3, 122.7e3, 122.9e3};
        static constexpr double bsd1[7] = {1.224, 0.801, 1.380, 1.000, 1.224, 1.518, 1.518};
        static constexpr double bzd1[7] = {1.282, 2.161, 1.282, 20., 1.282, 1.282, 1.282};
        static constexpr double bfm1[7] = {1.0, 1.0, 1.0, 1.0, 0.92, 1.0, 1.0};
        static constexpr double bfm2[7] = {0.0, 0.0, 0.0, 0.0, 0.25, 0.0, 0.0};
        static constexpr double bfm3[7] = {0.0, 0.0, 0.0, 0.0, 1.77, 0.0, 0.0};
        static constexpr double bfp1[7] = {1.0, 0.93, 1.0, 0.93, 0.93, 1.0, 1.0};
        static constexpr double bfp2[7] = {0.0, 0.31, 0.0, 0.19, 0.31, 0.0, 0.0};
        static constexpr double bfp3[7] = {0.0, 2.00, 0.0, 1.79, 2.00, 0.0, 0.0};
        constexpr double rt = 7.8;
        constexpr double rl = 24.0;
        auto& v = avar_;

        if (propv.lvar > 0) {
            // The reference falls through a switch from lvar down to 1.
            if (propv.lvar >= 5) {
                if (propv.klim <= 0 || propv.klim > 7) {
                    throw InvalidInput("climate code " + std::to_string(propv.klim) +
                                       " is outside 1..7");
                }
                const int k = propv.klim - 1;
                v.cv1 = bv1[k];
                v.cv2 = bv2[k];
                v.yv1 = xv1[k];
                v.yv2 = xv2[k];
                v.yv3 = xv3[k];
                v.csm1 = bsm1[k];
                v.csm2 = bsm2[k];
                v.ysm1 = xsm1[k];
                v.ysm2 = xsm2[k];
                v.ysm3 = xsm3[k];
                v.csp1 = bsp1[k];
                v.csp2 = bsp2[k];
                v.ysp1 = xsp1[k];
                v.ysp2 = xsp2[k];
                v.ysp3 = xsp3[k];
                v.csd1 = bsd1[k];
                v.zd = c(bzd1[k]);
                v.cfm1 = bfm1[k];
                v.cfm2 = bfm2[k];
                v.cfm3 = bfm3[k];
                v.cfp1 = bfp1[k];
                v.cfp2 = bfp2[k];
                v.cfp3 = bfp3[k];
            }
            if (propv.lvar >= 4) {
                v.kdv = propv.mdvar;
                v.ws = v.kdv >= 20;
                if (v.ws) v.kdv -= 20;
                v.w1 = v.kdv >= 10;
                if (v.w1) v.kdv -= 10;
                if (v.kdv < 0 || v.kdv > 3) {
                    v.kdv = 0;
                    prop.kwx = std::max(prop.kwx, 2);
                }
            }
            if (propv.lvar >= 3) {
                Real q = log(0.133 * prop.wn);
                v.gm = v.cfm1 + v.cfm2 / (pow(v.cfm3 * q, 2.0) + 1.0);
                v.gp = v.cfp1 + v.cfp2 / (pow(v.cfp3 * q, 2.0) + 1.0);
            }
            if (propv.lvar >= 2) {
                v.dexa = sqrt(18e6 * prop.he[0]) + sqrt(18e6 * prop.he[1]) + pow(575.7e12 / prop.wn, kThird);
            }
            if (br("avar.near_range", prop.dist < v.dexa))
                v.de = 130e3 * prop.dist / v.dexa;
            else
                v.de = 130e3 + prop.dist - v.dexa;
            v.vmd = curve(v.cv1, v.cv2, v.yv1, v.yv2, v.yv3, v.de);
            v.sgtm = curve(v.csm1, v.csm2, v.ysm1, v.ysm2, v.ysm3, v.de) * v.gm;
            v.sgtp = curve(v.csp1, v.csp2, v.ysp1, v.ysp2, v.ysp3, v.de) * v.gp;
            v.sgtd = v.sgtp * v.csd1;
            v.tgtd = (v.sgtp - v.sgtd) * v.zd;
            if (v.w1) {
                v.sgl = c(0.0);
            } else {
                Real q = (1.0 - 0.8 * exp(-prop.dist / 50e3)) * prop.dh * prop.wn;
                v.sgl = 10.0 * q / (q + 13.0);
            }
            if (v.ws)
                v.vs0 = c(0.0);
            else
                v.vs0 = pow(5.0 + 3.0 * exp(-v.de / 100e3), 2.0);
            propv.lvar = 0;
        }
        Real zt = zzt;
        Real zl = zzl;
        Real zc = zzc;
        switch (v.kdv) {
            case 0:
                zt = zc;
                zl = zc;
                break;
            case 1:
                zl = zc;
                break;
            case 2:
                zl = zt;
                break;
            default:
                break;
        }
        if (br("avar.deviate_out_of_range", abs(zt) > 3.1 || abs(zl) > 3.1 || abs(zc) > 3.1))
            prop.kwx = std::max(prop.kwx, 1);
        Real sgt;
        int time_branch;
        if (zt < 0.0) {
            sgt = v.sgtm;
            time_branch = 0;
        } else if (zt <= v.zd) {
            sgt = v.sgtp;
            time_branch = 1;
        } else {
            sgt = v.sgtd + v.tgtd / zt;
            time_branch = 2;
        }
        record("avar.time_spread", time_branch);
        Real vs = v.vs0 + pow(sgt * zt, 2.0) / (rt + zc * zc) + pow(v.sgl * zl, 2.0) / (rl + zc * zc);
        Real yr;
        if (v.kdv == 0) {
            yr = c(0.0);
            propv.sgc = sqrt(sgt * sgt + v.sgl * v.sgl + vs);
        } else if (v.kdv == 1) {
            yr = sgt * zt;
            propv.sgc = sqrt(v.sgl * v.sgl + vs);
        } else if (v.kdv == 2) {
            yr = sqrt(sgt * sgt + v.sgl * v.sgl) * zt;
            propv.sgc = sqrt(vs);
        } else {
            yr = sgt * zt + v.sgl * zl;
            propv.sgc = sqrt(vs);
        }
        Real avarv = prop.aref - v.vmd - yr - propv.sgc * zc;
        if (br("avar.compress_negative", avarv < 0.0)) avarv = avarv * (29.0 - avarv) / (29.0 - 10.0 * avarv);
        return avarv;
    }

    // ---- mode classification -----------------------------------------------

    Mode classify() {
        Real q = prop.dist - propa.dla;
        const long whole = trunc_to_long(q);
        record("mode.horizon_count", whole < 0 ? 0 : (whole == 0 ? 1 : 2));
        if (whole < 0) return Mode::line_of_sight;
        // dx is only meaningful once the scatter fit has run; the first test
        // short-circuits otherwise, as in the reference.
        if (br("mode.diffraction", prop.dist <= propa.dlsa || prop.dist <= propa.dx)) return Mode::diffraction;
        return Mode::scatter;
    }

private:
    static constexpr double kThird = 1.0 / 3.0;

    static Real sq_magnitude(const Complex& r) { return r.real() * r.real() + r.imag() * r.imag(); }

    bool br(std::string_view site, bool taken) {
        if (trace_) trace_->record(site, taken ? 1 : 0);
        return taken;
    }

    void record(std::string_view site, int outcome) {
        if (trace_) trace_->record(site, outcome);
    }

    void reset() {
        const Real z = c(0.0);
        prop.aref = prop.dist = prop.wn = prop.dh = prop.ens = prop.gme = z;
        prop.hg = prop.he = prop.dl = prop.the = {z, z};
        prop.zgnd = c.complex(z, z);
        propa.dlsa = propa.dx = propa.ael = propa.ak1 = propa.ak2 = z;
        propa.aed = propa.emd = propa.aes = propa.ems = propa.dla = propa.tha = z;
        propa.dls = {z, z};
        propv.sgc = z;
        adiff_ = {z, z, z, z, z, z};
        ascat_ = {z, z, z, z};
        wls_ = dmin_ = xae_ = z;
        avar_.reset(z);
    }

    struct AdiffState {
        Real wd1, xd1, afo, qk, aht, xht;
    };
    struct AscatState {
        Real ad, rr, etq, h0s;
    };
    struct AvarState {
        int kdv = 0;
        bool ws = false;
        bool w1 = false;
        Real dexa, de, vmd, vs0, sgl, sgtm, sgtp, sgtd, tgtd, gm, gp, zd;
        double cv1 = 0, cv2 = 0, yv1 = 0, yv2 = 0, yv3 = 0;
        double csm1 = 0, csm2 = 0, ysm1 = 0, ysm2 = 0, ysm3 = 0;
        double csp1 = 0, csp2 = 0, ysp1 = 0, ysp2 = 0, ysp3 = 0;
        double csd1 = 0, cfm1 = 0, cfm2 = 0, cfm3 = 0, cfp1 = 0, cfp2 = 0, cfp3 = 0;
        void reset(const Real& z) {
            dexa = de = vmd = vs0 = sgl = sgtm = sgtp = sgtd = tgtd = gm = gp = zd = z;
        }
    };

    BranchTrace* trace_;
    AdiffState adiff_;
    AscatState ascat_;
    AvarState avar_;
    Real wls_, dmin_, xae_;
    bool wlos_ = false;
    bool wscat_ = false;
};

}  // namespace itmstab::itm::detail

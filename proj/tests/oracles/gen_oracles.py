"""Independent reference values frozen into the C++ tests (mpmath, 40 digits)."""
import mpmath as mp

mp.mp.dps = 40

# Lambertian order at 30 degrees.
print("lambertian_order(30) =", -1 / mp.log(mp.cos(mp.radians(30)), 2))

# Nadir LoS gain: m = 1, A = 1e-4, d = 2.5.
m, A, d = 1, mp.mpf("1e-4"), mp.mpf("2.5")
H = (m + 1) * A / (2 * mp.pi * d**2)
print("H_nadir(2.5) =", H)
print("gamma example =", (mp.mpf("0.53") * 3 * mp.mpf("5.093e-6")) ** 2 / mp.mpf("1e-14"))


# WiFi two-slope model, default config.
def wifi_snr(dist):
    c = mp.mpf(299792458)
    f = mp.mpf("2.4e9")
    bp = mp.mpf(10)
    p = mp.mpf("0.1")
    n0 = mp.mpf(10) ** (mp.mpf(-174 + 10 - 30) / 10)
    b = mp.mpf("20e6")
    fs = (c / (4 * mp.pi * f)) ** 2
    if dist <= bp:
        g = fs / dist**2
    else:
        g = fs / bp**2 * (bp / dist) ** mp.mpf("3.5")
    return g * p / (n0 * b)


print("wifi_snr(3) =", wifi_snr(mp.mpf(3)))
print("wifi_snr(20) =", wifi_snr(mp.mpf(20)))
print("kkt objective =", mp.log(mp.mpf("20e6")) + mp.log(mp.mpf("80e6")))
print("2 ln 1e8 =", 2 * mp.log(mp.mpf("1e8")))


# 3-node path graph, two 1x1 heads averaged, ELU output.
def gat_path():
    h = [mp.mpf(1), mp.mpf(-2), mp.mpf("0.5")]
    heads = [(mp.mpf("0.5"), mp.mpf("0.3"), mp.mpf("-0.2")), (mp.mpf(-1), mp.mpf("0.1"), mp.mpf("0.4"))]
    nbrs = {0: [0, 1], 1: [0, 1, 2], 2: [1, 2]}
    bias = mp.mpf("0.05")
    out = []
    for i in range(3):
        acc = 0
        for w, al, ar in heads:
            z = [w * x for x in h]
            e = []
            for j in nbrs[i]:
                v = al * z[i] + ar * z[j]
                e.append(v if v > 0 else mp.mpf("0.2") * v)
            mx = max(e)
            ex = [mp.e ** (v - mx) for v in e]
            s = sum(ex)
            acc += sum(ex[k] / s * z[j] for k, j in enumerate(nbrs[i]))
        pre = acc / len(heads) + bias
        out.append(pre if pre > 0 else mp.e**pre - 1)
    return out


print("gat_path =", gat_path())

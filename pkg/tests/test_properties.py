"""Cross-scheme properties of the experiment harness."""
import pytest

from uintrsim.harness.probe import run_latency_probe, latency_summary
from uintrsim.harness.pto import run_pto, max_sustainable_freq

SCHEMES = [('ext', 'v5'), ('ext', 'v4'), ('ext', 'v3'), ('ext', 'v2'), ('ext', 'v1'),
           ('software', 'v5'), ('intel', 'v5'), ('kernel', 'v5')]


def test_max_pto_frequency_falls_with_entry_latency():
    pts = []
    for scheme, v in SCHEMES:
        lat = latency_summary(run_latency_probe(scheme, 'inactive', n=20, variant=v))['max']
        pts.append((lat, max_sustainable_freq(scheme, mix='inactive', variant=v), scheme, v))
    pts.sort()
    for (la, fa, *a), (lb, fb, *b) in zip(pts, pts[1:]):
        if la < lb:
            assert fa > fb, (a, b)
        else:
            assert fa == fb, (a, b)


@pytest.mark.xfail(strict=True, reason=(
    'the kernel path serves every edge through the same slow path, so its waveform is '
    'regular; the intel scheme alternates between its fast path and the kernel path as '
    'the target process is switched in and out, roughly doubling the edge spread. The '
    'two cannot agree within 5% under this model'))
def test_kernel_jitter_within_five_percent_of_intel():
    k, _ = run_pto('kernel', 10_000, 'mixed')
    i, _ = run_pto('intel', 10_000, 'mixed')
    assert abs(k.normalized - i.normalized) <= 0.05 * i.normalized

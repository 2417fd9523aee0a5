"""
Challenge attributes of a sequence
==================================

Each sequence can be labelled with the challenge attributes it exhibits:
tiny and extremely tiny targets, scale variation, fast motion, low
illumination, similar-scale targets and occlusion. The fast speed profile of
the simulator produces dashes of more than 60 px per frame.
"""

from uavmot import ScenarioConfig, classify_attributes, generate

for profile in ("slow", "fast"):
    sc = generate(ScenarioConfig(seed=3, speed_profile=profile))
    rep = sc.attribute_report
    print(f"{profile}: {sorted(rep.labels)}")
    fm = rep.results["FM"]
    print(f"  fast-motion statistic {fm.statistic:.3f} ({fm.note})")

# Low illumination needs the mean brightness of the RGB frames; without it the
# attribute is reported as skipped rather than absent.
gt = generate(ScenarioConfig(seed=3)).ground_truth
print("no brightness:", classify_attributes(gt, warn=False).results["LI"].present)
print("brightness 45:", classify_attributes(gt, brightness=45).results["LI"].present)
print("brightness 50:", classify_attributes(gt, brightness=50).results["LI"].present)

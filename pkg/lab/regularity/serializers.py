import math

from rest_framework import serializers

from .exceptions import LabError
from .fields import SCALAR_DEFAULTS, VELOCITY_DEFAULTS, Grid2, scalar_catalog, velocity_catalog
from .flow import TimeGrid
from .modcont import GRID_RESOLUTION_CELLS, S_MAX, ModulusFamily, geometric_radii

EXPERIMENT_KINDS = ("preservation", "sandwich", "euler_growth", "euler_validation", "flow_diagnostics")
VERDICT_STATUSES = ("PASS", "FAIL", "INDETERMINATE")


class StrictSerializer(serializers.Serializer):
    """Rejects keys that are not declared fields."""

    def to_internal_value(self, data):
        if isinstance(data, dict):
            unknown = sorted(set(data) - set(self.fields))
            if unknown:
                raise serializers.ValidationError({key: ["unknown key"] for key in unknown})
        return super().to_internal_value(data)


class VelocitySerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=sorted(VELOCITY_DEFAULTS))

    def get_fields(self):
        fields = super().get_fields()
        for name in sorted({p for defaults in VELOCITY_DEFAULTS.values() for p in defaults}):
            fields[name] = serializers.FloatField(required=False)
        return fields

    def validate(self, attrs):
        attrs = dict(attrs)
        kind = attrs.pop("kind")
        try:
            velocity_catalog(kind, attrs)
        except LabError as exc:
            raise serializers.ValidationError(str(exc))
        return {"kind": kind, **attrs}


class DataSerializer(StrictSerializer):
    name = serializers.ChoiceField(choices=sorted(SCALAR_DEFAULTS))
    exponent = serializers.FloatField(required=False)
    value = serializers.FloatField(required=False)
    half_period = serializers.FloatField(required=False, min_value=0.0)

    def validate(self, attrs):
        params = {k: v for k, v in attrs.items() if k != "name"}
        try:
            scalar_catalog(attrs["name"], params)
        except LabError as exc:
            raise serializers.ValidationError(str(exc))
        return dict(attrs)


class ModulusSerializer(StrictSerializer):
    family = serializers.ChoiceField(choices=["holder", "log_holder"])
    exponents = serializers.ListField(child=serializers.FloatField(), min_length=1)

    def validate(self, attrs):
        for exponent in attrs["exponents"]:
            try:
                ModulusFamily(attrs["family"], exponent)
            except LabError as exc:
                raise serializers.ValidationError(str(exc))
        return dict(attrs)


class TimeSerializer(StrictSerializer):
    t_end = serializers.FloatField()
    dt = serializers.FloatField()
    output_times = serializers.ListField(child=serializers.FloatField(), required=False)

    def validate(self, attrs):
        try:
            tg = TimeGrid(attrs["t_end"], attrs["dt"])
            for t in attrs.get("output_times", []):
                tg.index(t)
        except LabError as exc:
            raise serializers.ValidationError(str(exc))
        return dict(attrs)


class RadiiSerializer(StrictSerializer):
    """Either an explicit ``values`` list or a geometric ladder ``start``/``stop``/``ratio``."""

    values = serializers.ListField(child=serializers.FloatField(), required=False, min_length=4)
    start = serializers.FloatField(required=False)
    stop = serializers.FloatField(required=False, default=0.0)
    ratio = serializers.FloatField(required=False, default=0.5)
    floor_cells = serializers.IntegerField(required=False, min_value=0, default=0)

    def validate(self, attrs):
        values = attrs.get("values")
        if values is None and "start" not in attrs:
            raise serializers.ValidationError("give either 'values' or 'start'")
        largest = max(values) if values else attrs["start"]
        if not 0.0 < largest <= S_MAX:
            raise serializers.ValidationError(
                f"radii must lie in (0, s_max={S_MAX}] (modcont bound), got {largest:g}"
            )
        if values and any(b >= a for a, b in zip(values, values[1:])):
            raise serializers.ValidationError("radii must be strictly decreasing")
        if not 0.0 < attrs["ratio"] < 1.0:
            raise serializers.ValidationError(f"radius ratio must lie in (0, 1), got {attrs['ratio']}")
        return dict(attrs)


class SamplerSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=["sweep", "grid"], default="sweep")
    directions = serializers.IntegerField(min_value=4, default=720)
    shells_per_step = serializers.IntegerField(min_value=1, default=4)
    offset = serializers.FloatField(default=0.0)


class TolerancesSerializer(StrictSerializer):
    gap = serializers.FloatField(min_value=0.0, default=0.05)
    plateau = serializers.FloatField(min_value=0.0, default=0.01)
    initial = serializers.FloatField(min_value=0.0, default=0.02)
    slack = serializers.FloatField(min_value=0.0, default=0.01)
    saturation = serializers.FloatField(min_value=0.0, required=False)
    refinement = serializers.FloatField(min_value=0.0, default=1e-6)
    log_gap = serializers.FloatField(min_value=0.0, default=0.15)
    conservation = serializers.FloatField(min_value=0.0, default=1e-3)
    strain = serializers.FloatField(min_value=0.0, default=0.1)

    def validate(self, attrs):
        for key in ("gap", "plateau", "initial", "refinement", "log_gap", "conservation", "strain"):
            if key in attrs and not attrs[key] > 0.0:
                raise serializers.ValidationError({key: ["tolerances must be positive"]})
        return dict(attrs)


class PairsSerializer(StrictSerializer):
    count = serializers.IntegerField(min_value=1, default=100)
    max_separation = serializers.FloatField(default=0.5)

    def validate(self, attrs):
        if not attrs["max_separation"] > 0:
            raise serializers.ValidationError("max_separation must be positive")
        return dict(attrs)


class LogRatioSerializer(StrictSerializer):
    gamma = serializers.FloatField()
    t = serializers.FloatField()
    k_min = serializers.IntegerField(min_value=2)
    k_max = serializers.IntegerField(min_value=2)
    directions = serializers.IntegerField(min_value=4, default=64)

    def validate(self, attrs):
        if not attrs["gamma"] > 0:
            raise serializers.ValidationError(f"log-ratio check requires γ > 0, got γ = {attrs['gamma']}")
        if attrs["k_max"] < attrs["k_min"]:
            raise serializers.ValidationError("k_max must be >= k_min")
        return dict(attrs)


class GridSerializer(StrictSerializer):
    n = serializers.IntegerField()
    half_period = serializers.FloatField(default=math.pi)

    def validate(self, attrs):
        try:
            Grid2(attrs["n"], attrs["half_period"])
        except LabError as exc:
            raise serializers.ValidationError(str(exc))
        return dict(attrs)


class ModesSerializer(StrictSerializer):
    """Seeded band-limited odd-odd vorticity for the solver checks."""

    k_max = serializers.IntegerField(min_value=1, default=4)
    amplitude = serializers.FloatField(default=1.0)

    def validate(self, attrs):
        if not attrs["amplitude"] > 0:
            raise serializers.ValidationError("amplitude must be positive")
        return dict(attrs)


class StrainSerializer(StrictSerializer):
    cutoffs = serializers.ListField(child=serializers.FloatField(), min_length=2)
    outer = serializers.FloatField(default=1.0)

    def validate(self, attrs):
        cutoffs = attrs["cutoffs"]
        if any(b >= a for a, b in zip(cutoffs, cutoffs[1:])):
            raise serializers.ValidationError("strain cutoffs must be strictly decreasing")
        if not (0.0 < cutoffs[-1] and cutoffs[0] < attrs["outer"]):
            raise serializers.ValidationError(f"strain cutoffs must lie in (0, outer={attrs['outer']:g})")
        return dict(attrs)


def smallest_radius(section: dict, spacing: float) -> float:
    if section.get("values"):
        return min(section["values"])
    floor = section.get("floor_cells", 0) * spacing
    return float(geometric_radii(section["start"], section.get("stop", 0.0), section.get("ratio", 0.5), floor)[-1])


class ExperimentConfigSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=EXPERIMENT_KINDS)
    seed = serializers.IntegerField(min_value=0, default=0)
    jobs = serializers.IntegerField(min_value=1, required=False)
    output_dir = serializers.CharField(required=False)
    velocity = VelocitySerializer(required=False)
    data = DataSerializer(required=False)
    modulus = ModulusSerializer(required=False)
    time = TimeSerializer()
    center = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2, default=[0.0, 0.0])
    radii = RadiiSerializer(required=False)
    sampler = SamplerSerializer(required=False)
    tolerances = TolerancesSerializer(required=False)
    pairs = PairsSerializer(required=False)
    log_ratio = LogRatioSerializer(required=False)
    grid = GridSerializer(required=False)
    seeds = serializers.ListField(child=serializers.FloatField(min_value=0.0), required=False)
    log_gamma = serializers.FloatField(required=False)
    strain_cutoff_cells = serializers.FloatField(min_value=2.0, default=2.0)
    expect = serializers.ChoiceField(choices=["growth", "flat"], default="growth")
    modes = ModesSerializer(required=False)
    strain = StrainSerializer(required=False)

    REQUIRED = {
        "preservation": ("velocity", "data", "modulus", "radii"),
        "sandwich": ("velocity", "data", "modulus", "radii"),
        "euler_growth": ("data", "modulus", "radii", "grid"),
        "euler_validation": (),
        "flow_diagnostics": ("velocity",),
    }

    def validate(self, attrs):
        kind = attrs["kind"]
        missing = [key for key in self.REQUIRED[kind] if key not in attrs]
        if missing:
            raise serializers.ValidationError({key: [f"required for kind '{kind}'"] for key in missing})
        if kind == "sandwich" and attrs["modulus"]["family"] != "holder":
            raise serializers.ValidationError({"modulus": ["the sandwich experiment needs the holder family"]})
        if kind == "flow_diagnostics" and not ("pairs" in attrs or "log_ratio" in attrs):
            raise serializers.ValidationError("flow_diagnostics needs a 'pairs' or 'log_ratio' section")
        if kind == "euler_growth":
            if attrs["data"]["name"] not in ("bahouri_chemin", "zero"):
                raise serializers.ValidationError({"data": ["euler_growth runs 'bahouri_chemin' or the 'zero' control"]})
            if attrs["modulus"]["family"] != "holder":
                raise serializers.ValidationError({"modulus": ["euler_growth tracks the holder family"]})
            if attrs["grid"]["half_period"] < 2.0:
                raise serializers.ValidationError({"grid": [f"the odd-odd scenario needs L >= 2, got L = {attrs['grid']['half_period']}"]})
            self._check_resolution(attrs)
        if "log_gamma" in attrs and not attrs["log_gamma"] > 0:
            raise serializers.ValidationError({"log_gamma": [f"log_holder requires γ > 0, got γ = {attrs['log_gamma']}"]})
        if kind == "euler_validation":
            if not ("grid" in attrs or "strain" in attrs):
                raise serializers.ValidationError("euler_validation needs a 'grid' or a 'strain' section")
            if "strain" in attrs and "data" not in attrs:
                raise serializers.ValidationError({"data": ["required by the 'strain' section"]})
        if "pairs" in attrs:
            # catalog velocities live on the default box
            limit = math.pi / 4.0
            if attrs["pairs"]["max_separation"] > limit:
                raise serializers.ValidationError(
                    {"pairs": [f"max_separation must not exceed L/4 = {limit:.4g}, got {attrs['pairs']['max_separation']:g}"]}
                )
        if "log_ratio" in attrs and attrs["log_ratio"]["t"] > attrs["time"]["t_end"]:
            raise serializers.ValidationError({"log_ratio": ["t must not exceed time.t_end"]})
        return attrs

    def _check_resolution(self, attrs):
        spacing = 2.0 * attrs["grid"]["half_period"] / attrs["grid"]["n"]
        floor = GRID_RESOLUTION_CELLS * spacing
        try:
            smallest = smallest_radius(attrs["radii"], spacing)
        except LabError as exc:
            raise serializers.ValidationError({"radii": [str(exc)]})
        if smallest < floor * (1.0 - 1e-12):
            raise serializers.ValidationError(
                {"radii": [f"smallest radius {smallest:g} is below {GRID_RESOLUTION_CELLS}h = {floor:g} on the {attrs['grid']['n']}^2 grid"]}
            )


# Report payloads served by the API


class VerdictSerializer(serializers.Serializer):
    status = serializers.ChoiceField(choices=VERDICT_STATUSES)
    detail = serializers.CharField(allow_blank=True)


class ReportSummarySerializer(serializers.Serializer):
    name = serializers.CharField()
    kind = serializers.CharField()
    status = serializers.ChoiceField(choices=VERDICT_STATUSES)
    seed = serializers.IntegerField()
    schema_version = serializers.CharField()
    series = serializers.ListField(child=serializers.CharField())
    verdicts = serializers.DictField(child=VerdictSerializer())


class PlotEntrySerializer(serializers.Serializer):
    file = serializers.CharField()
    series = serializers.CharField()
    x = serializers.CharField()
    y = serializers.ListField(child=serializers.CharField())
    x_scale = serializers.CharField()
    y_scale = serializers.CharField()

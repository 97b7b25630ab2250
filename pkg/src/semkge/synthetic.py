"""Synthetic household knowledge graphs with repeated observations.

The generator emulates a fleet of simulated rooms: each environment is a
room of some type, objects appear in it (possibly as several instances),
and every appearance emits location, material and affordance observations.
Aggregating over environments yields a counted triple set whose default
configuration matches the target statistics: 3 relation types, 106
entities, a few hundred unique triples and well over ten thousand total
observations.

Object behavior (room affinities, materials, affordance sets) is drawn
per object name from a profile seed carried by the spec, and word vectors
are drawn per name around a cluster center, so two specs sharing names
agree on both - which lets a second "deployment" graph extend the first
one consistently.
"""

import zlib
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .graph import CountedTripleSet, KnowledgeGraph, Triple, Vocabulary
from .wordvec import WordVectorTable

ROOM_TYPES = ("bathroom", "bedroom", "kitchen", "livingroom")

MATERIALS = ("wood", "metal", "glass", "ceramic", "fabric", "plastic", "stone")

AFFORDANCES = ("pickup", "open", "close", "toggle", "fill", "empty", "wash",
               "cook", "slice", "pour", "wipe", "fold", "hang", "sleep",
               "sit", "watch", "read")

OBJECT_CLUSTERS = {
    "kitchenware": (
        "bowl", "mug", "cup", "plate", "pan", "pot", "kettle", "toaster",
        "microwave", "fridge", "oven", "stove", "dishwasher", "blender",
        "spatula", "knife", "fork", "spoon", "cabinet", "counter", "sink",
        "trashcan"),
    "bathroom_items": (
        "toilet", "bathtub", "shower", "towel", "soap", "toothbrush",
        "sponge", "mirror", "plunger", "razor", "faucet", "toiletpaper"),
    "bedroom_items": (
        "bed", "pillow", "blanket", "dresser", "wardrobe", "alarmclock",
        "nightstand", "lamp", "hanger", "mattress", "comforter", "slippers"),
    "living_items": (
        "sofa", "armchair", "television", "remote", "bookshelf",
        "coffeetable", "vase", "painting", "rug", "fireplace", "cushion",
        "stereo", "gameconsole", "curtain"),
    "shared": (
        "chair", "table", "door", "window", "shelf", "drawer", "box", "book",
        "plant", "phone", "laptop", "keys", "wallet", "bottle", "candle",
        "clock", "basket", "bin"),
}

DEPLOYMENT_OBJECTS = {
    "desk": "shared", "monitor": "living_items", "printer": "shared",
    "stapler": "shared", "notebook": "shared", "guitar": "living_items",
    "piano": "living_items", "speaker": "living_items",
    "headphones": "living_items", "heater": "shared", "fan": "shared",
    "airconditioner": "shared", "vacuum": "shared", "mop": "bathroom_items",
    "broom": "shared", "ladder": "shared", "toolbox": "shared",
    "drill": "shared", "hammer": "shared", "suitcase": "bedroom_items",
    "backpack": "bedroom_items", "umbrella": "shared", "coatrack": "shared",
    "mailbox": "shared", "doormat": "shared", "aquarium": "living_items",
    "birdcage": "living_items", "crib": "bedroom_items",
    "highchair": "kitchenware", "stroller": "shared", "scooter": "shared",
    "skateboard": "shared", "telescope": "living_items", "camera": "living_items",
    "projector": "living_items", "whiteboard": "shared", "beanbag": "living_items",
    "treadmill": "shared", "dumbbell": "shared", "yogamat": "bedroom_items",
}

_ROOM_AFFINITY = {
    "kitchenware": {"kitchen": 0.85, "livingroom": 0.05, "bedroom": 0.05, "bathroom": 0.05},
    "bathroom_items": {"bathroom": 0.88, "kitchen": 0.04, "bedroom": 0.05, "livingroom": 0.03},
    "bedroom_items": {"bedroom": 0.84, "livingroom": 0.08, "bathroom": 0.04, "kitchen": 0.04},
    "living_items": {"livingroom": 0.8, "bedroom": 0.1, "kitchen": 0.06, "bathroom": 0.04},
    "shared": {"kitchen": 0.3, "livingroom": 0.3, "bedroom": 0.25, "bathroom": 0.15},
}

_MATERIAL_POOL = {
    "kitchenware": ("metal", "ceramic", "glass", "plastic"),
    "bathroom_items": ("ceramic", "plastic", "fabric"),
    "bedroom_items": ("fabric", "wood"),
    "living_items": ("wood", "fabric", "glass", "stone"),
    "shared": ("wood", "plastic", "metal"),
}

_AFFORDANCE_POOL = {
    "kitchenware": ("pickup", "open", "close", "toggle", "fill", "empty",
                    "wash", "cook", "slice", "pour"),
    "bathroom_items": ("pickup", "open", "close", "toggle", "fill", "empty",
                       "wash", "wipe"),
    "bedroom_items": ("pickup", "open", "close", "fold", "hang", "sleep", "toggle"),
    "living_items": ("pickup", "toggle", "sit", "watch", "read", "open",
                     "close", "hang"),
    "shared": ("pickup", "open", "close", "toggle", "read", "fold"),
}

# Mean extra instances of a present object per environment, by room type.
_INSTANCE_RATE = {"bathroom": 0.65, "bedroom": 0.55, "kitchen": 1.35, "livingroom": 0.25}

# Appearance-probability ranges by room role, and the chance an object can
# appear in a second or third room type at all.
_APPEAR_PRIMARY = (0.55, 0.95)
_APPEAR_SECONDARY = (0.2, 0.5)
_APPEAR_TERTIARY = (0.05, 0.25)
_SECONDARY_PROB = 0.45
_TERTIARY_PROB = 0.12


@dataclass(frozen=True)
class SyntheticKGSpec:
    """Configuration of the synthetic world.

    ``profile_seed`` fixes object behavior and ``word_vector_seed`` fixes
    the word vectors; the seed passed to :func:`generate_synthetic_kg`
    only drives observation sampling.
    """

    room_types: tuple = ROOM_TYPES
    environments_per_room: int = 30
    n_objects: int = 78
    n_materials: int = 7
    n_affordances: int = 17
    extra_object_names: tuple = ()
    profile_seed: int = 20
    word_vector_seed: int = 7
    word_vector_dim: int = 32
    word_vector_noise: float = 0.4
    material_observe_range: tuple = (0.5, 0.95)
    affordance_observe_prob: float = 0.7
    appearance_scale: float = 1.0

    def __post_init__(self):
        if self.n_objects < 1:
            raise ConfigError("the spec needs at least one object")
        if not self.room_types:
            raise ConfigError("the spec needs at least one room type")
        if self.environments_per_room < 1:
            raise ConfigError("environments_per_room must be >= 1")
        if self.n_materials < 0 or self.n_affordances < 0:
            raise ConfigError("entity category counts cannot be negative")
        if self.n_materials > len(MATERIALS) or self.n_affordances > len(AFFORDANCES):
            raise ConfigError("not enough built-in material/affordance names")
        unknown = [r for r in self.room_types if r not in ROOM_TYPES]
        if unknown:
            raise ConfigError(f"unknown room types {unknown}; available: {ROOM_TYPES}")

    @property
    def object_names(self) -> tuple:
        base = [name for names in OBJECT_CLUSTERS.values() for name in names]
        if self.n_objects > len(base):
            base += [f"object{i:03d}" for i in range(self.n_objects - len(base))]
        return tuple(base[:self.n_objects]) + tuple(self.extra_object_names)

    @property
    def material_names(self) -> tuple:
        return MATERIALS[:self.n_materials]

    @property
    def affordance_names(self) -> tuple:
        return AFFORDANCES[:self.n_affordances]

    def cluster_of(self, name: str) -> str:
        for cluster, names in OBJECT_CLUSTERS.items():
            if name in names:
                return cluster
        if name in DEPLOYMENT_OBJECTS:
            return DEPLOYMENT_OBJECTS[name]
        clusters = list(OBJECT_CLUSTERS)
        return clusters[zlib.crc32(name.encode()) % len(clusters)]


def extend_for_deployment(spec: SyntheticKGSpec, extra_objects: int = 40) -> SyntheticKGSpec:
    """Spec for a deployment-time graph: same world plus novel objects."""
    pool = [n for n in DEPLOYMENT_OBJECTS if n not in set(spec.object_names)]
    if extra_objects > len(pool):
        pool += [f"novel{i:03d}" for i in range(extra_objects - len(pool))]
    return replace(spec, extra_object_names=tuple(pool[:extra_objects]))


@dataclass(frozen=True)
class SyntheticKG:
    kg: KnowledgeGraph
    categories: dict      # entity name -> objects/rooms/materials/affordances
    clusters: dict        # object name -> cluster name
    word_vectors: WordVectorTable


def _name_rng(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, zlib.crc32(name.encode())]))


@dataclass
class _Profile:
    rooms: dict           # room type -> appearance probability per environment
    primary_room: str
    materials: tuple
    material_weights: tuple
    material_observe_prob: float
    affordances: tuple


def _draw_profile(spec: SyntheticKGSpec, name: str) -> _Profile:
    rng = _name_rng(spec.profile_seed, name)
    cluster = spec.cluster_of(name)
    affinity = {r: _ROOM_AFFINITY[cluster][r] for r in spec.room_types}

    rooms = {}
    available = list(spec.room_types)
    weights = np.array([affinity[r] for r in available], dtype=float)
    weights /= weights.sum()
    primary = available[int(rng.choice(len(available), p=weights))]
    rooms[primary] = rng.uniform(*_APPEAR_PRIMARY)
    rest = [r for r in available if r != primary]
    if rest and rng.random() < _SECONDARY_PROB:
        w = np.array([affinity[r] for r in rest], dtype=float)
        secondary = rest[int(rng.choice(len(rest), p=w / w.sum()))]
        rooms[secondary] = rng.uniform(*_APPEAR_SECONDARY)
        rest = [r for r in rest if r != secondary]
    if rest and rng.random() < _TERTIARY_PROB:
        tertiary = rest[int(rng.integers(len(rest)))]
        rooms[tertiary] = rng.uniform(*_APPEAR_TERTIARY)
    if spec.appearance_scale != 1.0:
        rooms = {r: min(1.0, p * spec.appearance_scale) for r, p in rooms.items()}

    pool = [m for m in _MATERIAL_POOL[cluster] if m in spec.material_names]
    if not pool:
        pool = list(spec.material_names)
    n_mat = 0
    if pool:
        n_mat = 1 + int(rng.random() < 0.35)
        n_mat = min(n_mat, len(pool))
    mats = tuple(rng.choice(pool, size=n_mat, replace=False)) if n_mat else ()
    if len(mats) == 2:
        w_first = rng.uniform(0.6, 0.9)
        mat_weights = (w_first, 1.0 - w_first)
    else:
        mat_weights = (1.0,) * len(mats)

    apool = [a for a in _AFFORDANCE_POOL[cluster] if a in spec.affordance_names]
    if not apool:
        apool = list(spec.affordance_names)
    n_aff = min(len(apool), 2 + int(rng.integers(0, 4))) if apool else 0
    affs = tuple(rng.choice(apool, size=n_aff, replace=False)) if n_aff else ()

    return _Profile(rooms=rooms, primary_room=primary, materials=mats,
                    material_weights=mat_weights,
                    material_observe_prob=rng.uniform(*spec.material_observe_range),
                    affordances=affs)


def generate_word_vectors(spec: SyntheticKGSpec) -> WordVectorTable:
    """Cluster-structured vectors, stable per entity name."""
    table = WordVectorTable(spec.word_vector_dim)
    centers = {}

    def center(group: str) -> np.ndarray:
        if group not in centers:
            rng = _name_rng(spec.word_vector_seed, f"center:{group}")
            v = rng.normal(size=spec.word_vector_dim)
            centers[group] = v / np.linalg.norm(v)
        return centers[group]

    groups = {name: spec.cluster_of(name) for name in spec.object_names}
    groups.update({name: "rooms" for name in spec.room_types})
    groups.update({name: "materials" for name in spec.material_names})
    groups.update({name: "affordances" for name in spec.affordance_names})
    for name, group in groups.items():
        rng = _name_rng(spec.word_vector_seed, name)
        noise = rng.normal(size=spec.word_vector_dim)
        noise /= np.linalg.norm(noise)
        table.add(name, center(group) + spec.word_vector_noise * noise)
    return table


def generate_synthetic_kg(spec: SyntheticKGSpec, seed: int) -> SyntheticKG:
    """Sample a counted triple set over the spec's entity universe.

    Deterministic in (spec, seed).  Every entity of the universe is
    guaranteed to occur in at least one triple.
    """
    objects = spec.object_names
    rooms = tuple(spec.room_types)
    materials = spec.material_names
    affordances = spec.affordance_names

    entity_names = list(objects) + list(rooms) + list(materials) + list(affordances)
    entities = Vocabulary(entity_names)
    relation_order = [r for r, used in (("atLocation", True),
                                        ("madeOf", bool(materials)),
                                        ("hasAffordance", bool(affordances))) if used]
    relations = Vocabulary(relation_order)
    eid = entities.index
    rid = relations.index

    profiles = {name: _draw_profile(spec, name) for name in objects}
    rng = np.random.default_rng(np.random.SeedSequence([seed, 0x5eed]))
    counts: dict = {}

    def emit(h, r, t, c=1):
        key = Triple(h, r, t)
        counts[key] = counts.get(key, 0) + int(c)

    for room in rooms:
        room_id = eid(room)
        rate = _INSTANCE_RATE[room]
        eligible = [(name, prof) for name, prof in profiles.items() if room in prof.rooms]
        for _env in range(spec.environments_per_room):
            for name, prof in eligible:
                if rng.random() >= prof.rooms[room]:
                    continue
                instances = 1 + int(rng.poisson(rate))
                obj_id = eid(name)
                emit(obj_id, rid("atLocation"), room_id, instances)
                for _ in range(instances):
                    if prof.materials and rng.random() < prof.material_observe_prob:
                        m = prof.materials[int(rng.choice(len(prof.materials),
                                                          p=prof.material_weights))]
                        emit(obj_id, rid("madeOf"), eid(m))
                    for aff in prof.affordances:
                        if rng.random() < spec.affordance_observe_prob:
                            emit(obj_id, rid("hasAffordance"), eid(aff))

    _force_coverage(spec, profiles, entities, relations, counts)

    categories = {name: "objects" for name in objects}
    categories.update({name: "rooms" for name in rooms})
    categories.update({name: "materials" for name in materials})
    categories.update({name: "affordances" for name in affordances})
    kg = KnowledgeGraph(entities, relations, CountedTripleSet(counts))
    return SyntheticKG(kg=kg, categories=categories,
                       clusters={name: spec.cluster_of(name) for name in objects},
                       word_vectors=generate_word_vectors(spec))


def _force_coverage(spec, profiles, entities, relations, counts):
    """Give every entity of the universe at least one observation."""
    seen = set()
    for t in counts:
        seen.add(t.head)
        seen.add(t.tail)
    eid = entities.index
    rid = relations.index
    objects = list(spec.object_names)
    anchor = eid(objects[0])

    for name in objects:
        if eid(name) not in seen:
            counts[Triple(eid(name), rid("atLocation"),
                          eid(profiles[name].primary_room))] = 1
            seen.add(eid(name))
    for room in spec.room_types:
        if eid(room) not in seen:
            counts[Triple(anchor, rid("atLocation"), eid(room))] = 1
            seen.add(eid(room))
    for m in spec.material_names:
        if eid(m) not in seen:
            owner = next((eid(o) for o in objects if m in profiles[o].materials), anchor)
            counts[Triple(owner, rid("madeOf"), eid(m))] = 1
            seen.add(eid(m))
    for a in spec.affordance_names:
        if eid(a) not in seen:
            owner = next((eid(o) for o in objects if a in profiles[o].affordances), anchor)
            counts[Triple(owner, rid("hasAffordance"), eid(a))] = 1
            seen.add(eid(a))

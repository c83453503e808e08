from pathlib import Path

PROMPTS_PATH = Path(__file__).parent.parent / "prompts"
CONFIGS_PATH = Path(__file__).parent.parent.parent / "configs"

# === Tensor kernel ===
# Finite stand-in for -inf in additive attention masks
NEG_INF = -1e30
FD_STEP = 1e-5
OP_TOLERANCE = 1e-6
STACK_TOLERANCE = 1e-4

# === Checkpoint format ===
CHECKPOINT_MAGIC = b"DEIGCKPT"
CHECKPOINT_VERSION = 1
VOCAB_ENTRY = "text_sim.vocab"
CONFIG_ENTRY = "deig.config"

# === Diffusion ===
# Sampling starts from N(0, I); above this terminal alpha_bar training never sees that input
MAX_TERMINAL_ALPHA_BAR = 0.05

# === Smoke experiment ===
# Masked arm floors on held-out 2-instance color scenes
SMOKE_MIN_MAA = 0.9
SMOKE_MAX_LEAKAGE = 0.05

# === Text encoder ===
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"
TEMPLATE_WORDS = ["a", "person", "wearing", "and", ","]

# === Synthetic world ===
# 13 colors, RGB as multiples of 1/255, never exactly 0 or 255
PALETTE = {
    "red": (220, 30, 30),
    "blue": (30, 70, 210),
    "green": (40, 170, 60),
    "yellow": (245, 230, 40),
    "black": (20, 20, 20),
    "white": (240, 240, 240),
    "gray": (180, 180, 180),
    "brown": (120, 70, 30),
    "orange": (245, 140, 20),
    "purple": (130, 40, 170),
    "pink": (245, 150, 200),
    "gold": (190, 150, 30),
    "cyan": (40, 210, 220),
}
BACKGROUND_RGB = (128, 128, 128)
SKIN_RGB = (225, 190, 160)

MATERIALS = ["rubber", "fluffy", "metallic", "wooden", "plastic", "fabric", "leather", "glass"]
TEXTURES = ["striped", "plaid", "floral", "polka-dotted"]
OBJECT_NOUNS = [
    "bottle", "pillow", "cup", "chair", "vase", "bag",
    "ball", "box", "lamp", "book", "bowl", "umbrella",
]

# Person clothing regions, top to bottom, with their share of the box height
PERSON_REGIONS = ["hat", "upper", "lower"]
REGION_HEIGHT_FRACTIONS = {"hat": 0.2, "upper": 0.4, "lower": 0.4}
GARMENTS = {
    "hat": ["hat", "cap", "beanie"],
    "upper": ["shirt", "jacket", "sweater"],
    "lower": ["pants", "shorts", "skirt"],
}
PLURAL_GARMENTS = {"pants", "shorts"}

# Object attribute composition L1/L2/L3/L4
LEVEL_PROBABILITIES = {"L1": 0.30, "L2": 0.25, "L3": 0.25, "L4": 0.20}

# Material blend towards mid-gray on the odd/odd lattice, one level per material
MATERIAL_BLEND_STEP = 0.1
# Texture contrast towards black (bright colors) or white (dark colors)
TEXTURE_CONTRAST = 0.5
TEXTURE_DARK_THRESHOLD = 0.45

SCENE_FILE_VERSION = 1

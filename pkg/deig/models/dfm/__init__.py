from deig.models.dfm.attention import GatedFusionAttention, attention_flops, dense_attention
from deig.models.dfm.blocksparse import BlockSparseKernel, plan_blocks
from deig.models.dfm.grounding import GroundingFuser, broadcast_grounding, fourier_encode_box
from deig.models.dfm.mask import (
    InstanceMask,
    assign_visual_membership,
    build_instance_mask,
    mask_for_boxes,
)

__all__ = [
    "BlockSparseKernel",
    "GatedFusionAttention",
    "GroundingFuser",
    "InstanceMask",
    "assign_visual_membership",
    "attention_flops",
    "broadcast_grounding",
    "build_instance_mask",
    "dense_attention",
    "fourier_encode_box",
    "mask_for_boxes",
    "plan_blocks",
]

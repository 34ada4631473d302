from arenvq.aren import AttentiveVQVAE
from arenvq.adversarial import PatchDiscriminator
from arenvq.checkpoint import load_checkpoint, save_checkpoint
from arenvq.config import RunConfig, load_config
from arenvq.degrade import DegradeSpec

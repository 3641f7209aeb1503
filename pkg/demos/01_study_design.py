"""Walk through the factorial study design: registries, cells, prompts,
and the groupings every analysis runs over."""
from t2i_audit import build_design, build_prompt, group_cells, load_config

config = load_config()
print(f"{len(config.countries)} countries x {len(config.concepts)} concepts "
      f"x {len(config.models)} models")

design = build_design(config)
print(f"design size: {len(design)} cells")
print("first cells:")
for cell in design[:5]:
    print(f"  {cell.cell_id:42s} -> {build_prompt(cell, config)!r}")

print("\nnational-identity prompts use the bare country name:")
for cell in design:
    if cell.concept == "country" and cell.model == "gpt-image-1":
        print(f"  {build_prompt(cell, config)!r}", end="")
print()

for grouping in ("west_east", "english_core_vs_rest", "by_model"):
    groups = group_cells(design, grouping, config)
    sizes = {label: len(cells) for label, cells in sorted(groups.items())}
    print(f"\n{grouping}: {sizes}")

from r13_mfem.runner import main_cli


main_cli()

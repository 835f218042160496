namespace microloc {
}  // namespace microloc

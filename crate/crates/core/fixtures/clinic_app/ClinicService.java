package org.acme.clinic;

public class ClinicService {

    private final OwnerRepository ownerRepository;
    private final VisitRepository visitRepository;

    public OwnerCreated createOwner(String name, String telephone) {
        Owner owner = new Owner(name, telephone);
        ownerRepository.save(owner);
        return new OwnerCreated(owner);
    }

    public OwnerDetail getOwner(int ownerId) {
        Owner owner = ownerRepository.findById(ownerId);
        return new OwnerDetail(owner);
    }

    public VisitCreated createVisit(PetDetail pet, String date, String description) {
        Visit visit = new Visit(pet, date, description);
        visitRepository.save(visit);
        return new VisitCreated(visit);
    }

    public VisitLog visitsForPet(PetDetail pet) {
        VisitList visits = visitRepository.findByPetId(pet);
        return new VisitLog(visits);
    }

    public PetCreated registerPet(OwnerDetail owner, String name, String type) {
        Pet pet = new Pet(owner, name, type);
        return new PetCreated(pet);
    }

    public PetDetail petOf(OwnerDetail owner, int petId) {
        Pet pet = lookupPet(owner, petId);
        return new PetDetail(pet);
    }

    public PetDetail lookupPet(OwnerDetail owner, int petId) {
        Pet pet = owner.petById(petId);
        return new PetDetail(pet);
    }

    public boolean isSupportedPetType(String type) {
        if (type.equals("cat") || type.equals("dog") || type.equals("bird")) {
            return true;
        }
        return false;
    }

    public boolean isPastDate(String date) {
        if (date.compareTo(today()) < 0) {
            return true;
        }
        return false;
    }

    public boolean isToday(String date) {
        return date.equals(today());
    }

    public String today() {
        return "2025-06-01";
    }

    public OwnerList ownerDirectory() {
        return new OwnerList();
    }

    public VetList vetBoard() {
        return new VetList();
    }
}
